import collections

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matrixgen.trajdata import (
    ETH_UCY_SUBSETS,
    DatasetFormatError,
    Scene,
    SynthSpec,
    build_windows,
    leave_one_out,
    load_dataset_dir,
    normalize_window,
    parse_dataset_text,
    preset,
    serialize_scene,
    synth_scene,
    write_scene,
)


def scene_from_tracks(tracks: dict[int, tuple[int, np.ndarray]], n_frames: int) -> Scene:
    """``tracks[agent] = (first_frame, (T, 2) positions)``."""
    frames = [{} for _ in range(n_frames)]
    for agent, (start, pts) in tracks.items():
        for k, p in enumerate(pts):
            frames[start + k][agent] = np.asarray(p, dtype=float)
    return Scene(frames=frames)


def line(t, n=1, speed=(1.0, 0.0), origin=(0.0, 0.0), dt=0.4):
    return np.asarray(origin) + np.outer(np.arange(t), speed) * dt


# -- parsing -------------------------------------------------------------------


def test_parse_two_lines_with_stride():
    sc = parse_dataset_text("0 1 0.0 0.0\n10 1 0.4 0.0\n")
    assert len(sc) == 2 and sc.stride == 10
    np.testing.assert_allclose(sc.frames[1][1] - sc.frames[0][1], [0.4, 0.0])


def test_parse_malformed_line_names_line_number():
    with pytest.raises(DatasetFormatError, match="line 1"):
        parse_dataset_text("0 1 abc 0.0\n")
    with pytest.raises(DatasetFormatError, match="line 3"):
        parse_dataset_text("0 1 0 0\n# note\n10 2 1.0\n")


def test_parse_rejects_duplicates_and_empty():
    with pytest.raises(DatasetFormatError, match="duplicate"):
        parse_dataset_text("0 1 0 0\n0 1 1 1\n")
    with pytest.raises(DatasetFormatError):
        parse_dataset_text("# only comments\n\n")


def test_parse_accepts_float_frame_ids_and_tabs():
    sc = parse_dataset_text("0.0\t1.0\t1.5\t2.5\n10.0\t1.0\t1.9\t2.5\n")
    assert sc.agent_ids() == [1] and sc.stride == 10


def test_gap_frames_stay_as_empty_frames():
    sc = parse_dataset_text("0 1 0 0\n30 1 1 0\n10 2 5 5\n")
    assert len(sc) == 4 and sc.frames[2] == {}


record = st.tuples(
    st.integers(0, 40), st.integers(1, 6),
    st.floats(-1e3, 1e3, allow_nan=False), st.floats(-1e3, 1e3, allow_nan=False),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(record, min_size=1, max_size=40, unique_by=lambda r: (r[0], r[1])), st.sampled_from([1, 10]))
def test_parse_serialize_round_trip(rows, scale):
    text = "".join(f"{f * scale} {a} {x!r} {y!r}\n" for f, a, x, y in rows)
    sc = parse_dataset_text(text)
    want = collections.Counter((f * scale, a, x, y) for f, a, x, y in rows)
    assert collections.Counter(sc.records()) == want
    again = parse_dataset_text(serialize_scene(sc))
    assert again.records() == sc.records()


def test_load_dataset_dir_layouts(tmp_path):
    (tmp_path / "ETH.txt").write_text("0 1 0 0\n")
    (tmp_path / "ZARA").mkdir()
    (tmp_path / "ZARA" / "a.txt").write_text("0 1 0 0\n")
    (tmp_path / "ZARA" / "b.txt").write_text("0 2 0 0\n")
    (tmp_path / "README.md").write_text("ignored")
    subsets = load_dataset_dir(tmp_path)
    assert list(subsets) == ["ETH", "ZARA"]
    assert [s.name for s in subsets["ZARA"]] == ["ZARA/a", "ZARA/b"]


def test_load_dataset_dir_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset_dir(tmp_path / "missing")
    with pytest.raises(DatasetFormatError):
        load_dataset_dir(tmp_path)


# -- windows -------------------------------------------------------------------


def test_exactly_one_window_when_length_is_h_plus_f():
    ws = build_windows(scene_from_tracks({1: (0, line(20))}, 20))
    assert len(ws) == 1 and ws[0].anchor == 7
    assert ws[0].past.shape == (1, 8, 2) and ws[0].future.shape == (1, 12, 2)


def test_too_short_gives_no_windows():
    assert build_windows(scene_from_tracks({1: (0, line(15))}, 15)) == []


def test_three_agents_25_frames_give_six_anchors():
    tracks = {a: (0, line(25, origin=(0, a))) for a in (1, 2, 3)}
    text = serialize_scene(scene_from_tracks(tracks, 25))
    ws = build_windows(parse_dataset_text(text))
    assert [w.anchor for w in ws] == list(range(7, 13))
    assert all(w.agents == (1, 2, 3) for w in ws)


def test_overlapping_agents_share_only_the_common_window():
    sc = scene_from_tracks({1: (0, line(25)), 2: (5, line(20, origin=(0, 3)))}, 25)
    ws = build_windows(sc)
    shared = [w for w in ws if w.agents == (1, 2)]
    assert [w.anchor for w in shared] == [12]
    assert all(len(w.agents) <= 1 for w in ws if w.anchor < 12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 40), st.integers(2, 6), st.integers(1, 6))
def test_window_count_formula(length, h, f):
    sc = scene_from_tracks({1: (0, line(length))}, length) if length else Scene(frames=[])
    assert len(build_windows(sc, h, f)) == max(0, length - (h + f) + 1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(1, 25)), min_size=1, max_size=5))
def test_windows_never_include_partial_agents(spans):
    tracks = {i + 1: (s, line(n)) for i, (s, n) in enumerate(spans)}
    total = max(s + n for s, n in spans)
    sc = scene_from_tracks(tracks, total)
    for w in build_windows(sc, 4, 3):
        assert np.isfinite(w.past).all() and np.isfinite(w.future).all()
        for a in w.agents:
            s, pts = tracks[a]
            assert s <= w.anchor - 3 and w.anchor + 3 < s + len(pts)


# -- normalization -------------------------------------------------------------


def test_stationary_agent_has_zero_features():
    w = build_windows(scene_from_tracks({1: (0, np.tile([[3.0, -1.0]], (20, 1)))}, 20))[0]
    np.testing.assert_array_equal(normalize_window(w).node, 0.0)


def test_constant_velocity_features():
    w = build_windows(scene_from_tracks({1: (0, line(20, speed=(1.0, 0.0), origin=(5, 2)))}, 20))[0]
    feats = normalize_window(w, 0.4)
    np.testing.assert_allclose(feats.node[0, :, 0], np.arange(-7, 1) * 0.4, atol=1e-12)
    np.testing.assert_allclose(feats.node[0, :, 1], 0.0, atol=1e-12)
    np.testing.assert_allclose(feats.node[0, :, 2:], np.tile([1.0, 0.0], (8, 1)), atol=1e-12)
    np.testing.assert_allclose(feats.dest_rel[0], [12 * 0.4, 0.0], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_denormalize_inverts_normalize(seed):
    rng = np.random.default_rng(seed)
    tracks = {a: (0, rng.normal(scale=50.0, size=(20, 2))) for a in (1, 2, 3)}
    w = build_windows(scene_from_tracks(tracks, 20))[0]
    feats = normalize_window(w)
    np.testing.assert_allclose(feats.denormalize(feats.future_rel), w.future, atol=1e-5)
    np.testing.assert_allclose(feats.denormalize(feats.node[:, :, :2]), w.past, atol=1e-5)


# -- splits --------------------------------------------------------------------


def test_leave_one_out_hotel():
    plan = leave_one_out(ETH_UCY_SUBSETS, "HOTEL")
    assert plan.training == ("ETH", "UNIV", "ZARA1", "ZARA2")


def test_leave_one_out_unknown():
    with pytest.raises(KeyError):
        leave_one_out(ETH_UCY_SUBSETS, "MARS")


def test_rotation_holds_out_each_once():
    plans = [leave_one_out(ETH_UCY_SUBSETS, s) for s in ETH_UCY_SUBSETS]
    assert sorted(p.held_out for p in plans) == sorted(ETH_UCY_SUBSETS)
    for p in plans:
        assert p.held_out not in p.training and len(p.training) == 4


# -- synthetic scenes ----------------------------------------------------------


def test_single_agent_no_noise_is_straight():
    sc = synth_scene(SynthSpec(n_agents=1, goals=[(100.0, 0.0)], speed=1.2, frames=30))
    pts = np.stack([fr[1] for fr in sc.frames])
    np.testing.assert_allclose(pts[:, 1], 0.0, atol=1e-12)
    np.testing.assert_allclose(np.diff(pts[:, 0]), 1.2 * 0.4, atol=1e-12)


def test_synth_is_deterministic_per_seed():
    spec = preset("two-goal", seed=4)
    a, b = serialize_scene(synth_scene(spec)), serialize_scene(synth_scene(spec))
    assert a == b
    assert a != serialize_scene(synth_scene(preset("two-goal", seed=5)))


def test_agent_idles_at_goal_when_reached_early():
    sc = synth_scene(SynthSpec(n_agents=1, goals=[(1.0, 0.0)], speed=1.0, frames=20))
    np.testing.assert_allclose(sc.frames[-1][1], [1.0, 0.0])


def test_synth_rejects_non_positive_speed():
    with pytest.raises(ValueError):
        synth_scene(SynthSpec(n_agents=1, goals=[(1.0, 0.0)], speed=0.0))


def test_two_goal_destinations_are_bimodal_at_the_goals():
    ws = build_windows(synth_scene(preset("two-goal")))
    dest = np.concatenate([normalize_window(w).dest_rel for w in ws])
    upper, lower = dest[dest[:, 1] > 0], dest[dest[:, 1] < 0]
    assert len(ws) == 2560 and len(upper) == len(lower) == 2560
    np.testing.assert_allclose(upper.mean(axis=0), [2.0, 2.0], atol=0.05)
    np.testing.assert_allclose(lower.mean(axis=0), [2.0, -2.0], atol=0.05)
    assert np.all(np.abs(dest[:, 1]) > 1.5)


def test_unknown_preset():
    with pytest.raises(KeyError):
        preset("nope")


def test_write_then_parse(tmp_path):
    sc = synth_scene(preset("straight"))
    write_scene(sc, tmp_path / "s.txt")
    again = load_dataset_dir(tmp_path)["s"][0]
    assert again.records() == sc.records()
