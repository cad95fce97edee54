import numpy as np
import pytest

from rrur.data import TrajectorySpec, generate_trajectory
from rrur.errors import LengthMismatch, ZeroVariance
from rrur.evaluate import (
    PRED_HEADER,
    FkOracleModel,
    compare,
    evaluate,
    mse,
    orientation_error_series,
    position_error_series,
    positions,
    r2,
)


def _poses(n, seed):
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(-0.1, 0.1, n), rng.uniform(-0.15, 0.15, n), rng.uniform(185, 210, n)])


def test_identical_series(params):
    p = _poses(20, 0)
    assert np.all(position_error_series(params, p, p) == 0.0)
    assert mse(orientation_error_series(p, p)) == 0.0
    assert r2(p, p) == 1.0


def test_height_offset(params):
    p = _poses(20, 1)
    q = p.copy()
    q[:, 2] += 1.0
    np.testing.assert_allclose(position_error_series(params, q, p), np.tile([0.0, 0.0, 1.0], (20, 1)), atol=1e-12)


def test_position_errors_match_elementwise(params):
    a, b = _poses(15, 2), _poses(15, 3)
    err = position_error_series(params, a, b)
    for i in range(15):
        ba, ga, za = a[i]
        bb, gb, zb = b[i]
        xa = params.h * np.cos(ba) * np.sin(ga) - params.r_A * np.sin(ba) * np.sin(ga)
        xb = params.h * np.cos(bb) * np.sin(gb) - params.r_A * np.sin(bb) * np.sin(gb)
        ya, yb = -params.h * np.sin(ba), -params.h * np.sin(bb)
        np.testing.assert_allclose(err[i], [xa - xb, ya - yb, za - zb], atol=1e-12)


def test_orientation_in_degrees():
    p = np.zeros((3, 3))
    q = p.copy()
    q[:, 0] = np.radians(2.0)
    np.testing.assert_allclose(orientation_error_series(q, p), [[2.0, 0.0]] * 3)
    assert mse(orientation_error_series(q, p)) == pytest.approx(2.0)


def test_r2_of_mean_prediction():
    t = _poses(30, 4)
    assert r2(np.tile(t.mean(axis=0), (30, 1)), t) == pytest.approx(0.0, abs=1e-12)


def test_r2_zero_variance():
    t = np.ones((5, 3))
    with pytest.raises(ZeroVariance):
        r2(t, t)


def test_length_mismatch(params):
    with pytest.raises(LengthMismatch):
        position_error_series(params, _poses(4, 5), _poses(5, 5))
    with pytest.raises(LengthMismatch):
        r2(_poses(4, 5), _poses(5, 5))


def test_mse_permutation_invariant(params):
    a, b = _poses(40, 6), _poses(40, 7)
    perm = np.random.default_rng(8).permutation(40)
    e1 = mse(position_error_series(params, a, b))
    e2 = mse(position_error_series(params, a[perm], b[perm]))
    assert e1 == pytest.approx(e2, rel=1e-12)


def test_r2_shift_invariant():
    a, b = _poses(40, 9), _poses(40, 10)
    assert r2(a + 3.0, b + 3.0) == pytest.approx(r2(a, b), rel=1e-9)


def test_mse_empty():
    with pytest.raises(ValueError):
        mse(np.zeros((0, 3)))


def test_positions_neutral(params):
    np.testing.assert_allclose(positions(params, [[0.0, 0.0, 190.0]]), [[0.0, 0.0, 190.0]])


def test_oracle_comparison(params, z0, tmp_path):
    test = generate_trajectory(params, TrajectorySpec(np.radians(3.0), np.radians(4.0), 5.0, z0, 10.0, 20))
    oracle = FkOracleModel(params)
    results, text = compare(params, {"a": oracle, "b": oracle}, test, tmp_path)
    for m in results.values():
        assert m.mse_position < 1e-12
        assert m.mse_orientation < 1e-12
        assert m.r2 == pytest.approx(1.0, abs=1e-12)
        assert m.n_samples == 20
    assert (tmp_path / "report.txt").read_text() == text
    lines = (tmp_path / "pred_a.csv").read_text().splitlines()
    assert lines[0] == PRED_HEADER
    assert len(lines) == 21
    assert "ratio b/a" in text


def test_evaluate_returns_predictions(params, z0):
    test = generate_trajectory(params, TrajectorySpec(0.0, np.radians(2.0), 0.0, z0, 10.0, 5))
    metrics, pred = evaluate(params, FkOracleModel(params), test)
    np.testing.assert_allclose(pred, test.target, atol=1e-9)
    assert metrics.train_time_s == 0.0
