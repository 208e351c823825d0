"""Independent reference implementations written with plain loops and math.

Nothing here imports the package, so a shared bug cannot hide on both sides.
"""

import math

import numpy as np


def random_mixture(rng, k=None, spread=5.0, sigma_range=(0.05, 3.0)):
    k = k or int(rng.integers(1, 7))
    c = rng.dirichlet(np.ones(k))
    mu = rng.normal(scale=spread, size=(k, 2))
    sigma = rng.uniform(*sigma_range, size=(k, 2))
    rho = rng.uniform(-0.95, 0.95, size=k)
    d = mu[rng.integers(k)] + rng.normal(scale=2.0, size=2)
    return c, mu, sigma, rho, d


def brute_log_density(c, mu, sigma, rho, d):
    """log sum_k c_k N(d; mu_k, Sigma_k) with the 2x2 inverse written out."""
    terms = []
    for k in range(len(c)):
        sxx = sigma[k][0] ** 2
        syy = sigma[k][1] ** 2
        sxy = rho[k] * sigma[k][0] * sigma[k][1]
        det = sxx * syy - sxy * sxy
        dx = d[0] - mu[k][0]
        dy = d[1] - mu[k][1]
        maha = (syy * dx * dx - 2 * sxy * dx * dy + sxx * dy * dy) / det
        terms.append(math.log(c[k]) - math.log(2 * math.pi) - 0.5 * math.log(det) - 0.5 * maha)
    top = max(terms)
    return top + math.log(sum(math.exp(t - top) for t in terms))


def brute_ade(pred, gt):
    total, count = 0.0, 0
    for i in range(len(pred)):
        for t in range(len(pred[i])):
            total += math.hypot(pred[i][t][0] - gt[i][t][0], pred[i][t][1] - gt[i][t][1])
            count += 1
    return total / count


def brute_fde(pred, gt):
    vals = [math.hypot(p[-1][0] - g[-1][0], p[-1][1] - g[-1][1]) for p, g in zip(pred, gt)]
    return sum(vals) / len(vals)


def brute_best_of(samples, gt, metric):
    fn = brute_ade if metric == "ade" else brute_fde
    per_agent = []
    for i in range(len(gt)):
        per_agent.append(min(fn([s[i]], [gt[i]]) for s in samples))
    return sum(per_agent) / len(per_agent)


def brute_asd(samples):
    best = 0.0
    for a in range(len(samples)):
        for b in range(a + 1, len(samples)):
            steps = len(samples[a])
            dist = sum(math.hypot(samples[a][t][0] - samples[b][t][0], samples[a][t][1] - samples[b][t][1])
                       for t in range(steps)) / steps
            best = max(best, dist)
    return best


def brute_histogram(values, lo, hi, bins):
    counts = [0] * bins
    width = (hi - lo) / bins
    for v in values:
        idx = int((v - lo) / width) if width > 0 else 0
        counts[min(max(idx, 0), bins - 1)] += 1
    n = len(values)
    return [x / n for x in counts]


def brute_chi_square(gen, ref, bins=20):
    lo = min(min(gen), min(ref))
    hi = max(max(gen), max(ref))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    x = brute_histogram(gen, lo, hi, bins)
    y = brute_histogram(ref, lo, hi, bins)
    return sum((a - b) ** 2 / (a + b) for a, b in zip(x, y) if a + b > 0)
