import numpy as np
import pytest

from matrixgen.encoder import Encoder, edge_inputs, encode_edge_history, encode_node_history
from matrixgen.gradcore import LSTMCell, ShapeError, make_rng
from matrixgen.trajdata import TrajectoryWindow, normalize_window


def window(past: np.ndarray, agents=None) -> TrajectoryWindow:
    n = past.shape[0]
    return TrajectoryWindow(agents=tuple(agents or range(1, n + 1)), past=past, future=np.zeros((n, 12, 2)), anchor=7)


def random_past(rng, n, spread=1.0):
    start = rng.normal(scale=spread, size=(n, 1, 2))
    steps = rng.normal(scale=0.3, size=(n, 8, 2)).cumsum(axis=1)
    return start + steps


def zeroed(cell):
    for p in cell.parameters():
        p.data[...] = 0
    return cell


def test_zero_features_zero_weights_give_zero():
    cell = zeroed(LSTMCell(4, 128, make_rng(0)))
    out = encode_node_history(cell, np.zeros((3, 8, 4)))
    assert out.shape == (3, 128)
    np.testing.assert_array_equal(out.data, 0)


def test_node_history_shape_and_horizon_check():
    cell = LSTMCell(4, 128, make_rng(0))
    assert encode_node_history(cell, np.ones((2, 8, 4))).shape == (2, 128)
    with pytest.raises(ShapeError):
        encode_node_history(cell, np.ones((2, 7, 4)))
    with pytest.raises(ShapeError):
        encode_node_history(cell, np.ones((2, 8, 3)))


def test_identical_agents_get_identical_encodings():
    rng = make_rng(1)
    cell = LSTMCell(4, 128, rng)
    feats = np.repeat(rng.normal(size=(1, 8, 4)), 5, axis=0)
    out = encode_node_history(cell, feats).data
    for row in out[1:]:
        assert row.tobytes() == out[0].tobytes()


def test_no_neighbors_give_zero_edge_input_and_output():
    rng = make_rng(2)
    past = np.stack([np.zeros((8, 2)), np.full((8, 2), 50.0)])
    edge = edge_inputs(normalize_window(window(past)), 3.0)
    np.testing.assert_array_equal(edge, 0)
    cell = LSTMCell(4, 16, rng)
    cell.bias.data[...] = 0
    np.testing.assert_array_equal(encode_edge_history(cell, edge).data, 0)


def test_duplicated_neighbor_doubles_aggregate():
    rng = make_rng(3)
    ego, other = random_past(rng, 2, spread=0.5)
    single = edge_inputs(normalize_window(window(np.stack([ego, other]))), 10.0)
    double = edge_inputs(normalize_window(window(np.stack([ego, other, other]))), 10.0)
    np.testing.assert_allclose(double[0], 2 * single[0], rtol=0, atol=1e-12)


def test_edge_input_is_relative_state():
    past = np.stack([np.zeros((8, 2)), np.tile([[1.0, 2.0]], (8, 1)) + np.outer(np.arange(8), [0.4, 0.0])])
    edge = edge_inputs(normalize_window(window(past), 0.4), 5.0)
    np.testing.assert_allclose(edge[0, :, :2], past[1] - past[0])
    np.testing.assert_allclose(edge[0, :, 2:], np.tile([1.0, 0.0], (8, 1)))
    np.testing.assert_allclose(edge[1, :, :2], past[0] - past[1])


def test_radius_excludes_far_neighbors_per_step():
    ego = np.zeros((8, 2))
    other = np.stack([[2.0 + 0.5 * t, 0.0] for t in range(8)])   # leaves radius 3 after t=2
    edge = edge_inputs(normalize_window(window(np.stack([ego, other]))), 3.0)
    inside = np.hypot(*(other - ego).T) <= 3.0
    assert np.all(edge[0, inside, 0] > 0) and np.all(edge[0, ~inside] == 0)


def test_neighbor_shuffle_is_bit_identical():
    rng = make_rng(4)
    past = random_past(rng, 6, spread=0.7)
    base = edge_inputs(normalize_window(window(past)), 3.0)
    for _ in range(5):
        perm = np.concatenate([[0], 1 + rng.permutation(5)])
        shuffled = edge_inputs(normalize_window(window(past[perm])), 3.0)
        assert shuffled[0].tobytes() == base[0].tobytes()


def test_single_agent_edge_half_is_zero_input_response():
    rng = make_rng(5)
    enc = Encoder(16, 8, rng)
    feats = normalize_window(window(random_past(rng, 1)))
    e = enc.encode_windows([feats]).data
    zero_response = encode_edge_history(enc.edge_lstm, np.zeros((1, 8, 4))).data
    np.testing.assert_array_equal(e[:, 16:], zero_response)


def test_default_context_dim():
    assert Encoder(128, 128, make_rng(0)).context_dim == 256


def test_relabeling_agents_permutes_contexts():
    rng = make_rng(6)
    enc = Encoder(32, 32, rng)
    past = random_past(rng, 5, spread=1.0)
    base = enc.encode_windows([normalize_window(window(past))]).data
    perm = rng.permutation(5)
    moved = enc.encode_windows([normalize_window(window(past[perm], agents=[10 + p for p in perm]))]).data
    np.testing.assert_array_equal(moved, base[perm])
