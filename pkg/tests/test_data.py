import numpy as np
import pytest

from rrur.data import (
    CSV_HEADER,
    Dataset,
    TrajectorySpec,
    axis_points,
    dataset_residuals,
    default_test_trajectory,
    generate_grid,
    generate_trajectory,
    generate_uniform,
    load_csv,
    save_csv,
)
from rrur.errors import EmptyDataset, FormatError, IoError, WorkspaceViolation
from rrur.fk import fk_trajectory


def test_single_point_grid(params, z0):
    ds = generate_grid(params, (z0, z0, 1.0), (0.0, 0.0, 0.1), (0.0, 0.0, 0.1))
    assert len(ds) == 1
    assert np.ptp(ds.theta[0]) < 1e-12
    assert ds.grid_spec["n_skipped"] == 0


def test_grid_row_major(params, box):
    (zl, zh), (bl, bh), (gl, gh) = box
    ds = generate_grid(params, (zl, zh, (zh - zl) / 2), (bl, bh, (bh - bl) / 2), (gl, gh, (gh - gl) / 3))
    assert len(ds) == 3 * 3 * 4
    assert np.all(np.diff(ds.z_p) >= 0)
    np.testing.assert_allclose(ds.gamma[:4], axis_points(gl, gh, (gh - gl) / 3))


def test_grid_past_reach_skips(params, z0):
    ds = generate_grid(params, (z0, z0 + 400.0, 50.0), (0.0, 0.0, 1.0), (0.0, 0.0, 1.0))
    assert ds.grid_spec["n_skipped"] > 0
    assert len(ds) + ds.grid_spec["n_skipped"] == ds.grid_spec["n_requested"]
    assert np.max(np.abs(dataset_residuals(params, ds))) < 1e-9


def test_grid_all_unreachable(params):
    with pytest.raises(EmptyDataset):
        generate_grid(params, (5000.0, 5100.0, 50.0), (0.0, 0.0, 1.0), (0.0, 0.0, 1.0))


def test_axis_points():
    np.testing.assert_allclose(axis_points(0.0, 1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    assert len(axis_points(0.0, 0.3, 0.1)) == 4
    with pytest.raises(ValueError):
        axis_points(0.0, 1.0, 0.0)


def test_uniform_residuals_and_determinism(params):
    a = generate_uniform(params, 500, seed=1)
    b = generate_uniform(params, 500, seed=1)
    c = generate_uniform(params, 500, seed=2)
    np.testing.assert_array_equal(a.theta, b.theta)
    assert not np.array_equal(a.theta, c.theta)
    assert np.max(np.abs(dataset_residuals(params, a))) < 1e-9
    assert np.all((a.theta > np.pi / 2) & (a.theta < np.pi))


def test_zero_amplitude_trajectory(params, z0):
    ds = generate_trajectory(params, TrajectorySpec(0.0, 0.0, 0.0, z0, 10.0, 7))
    assert len(ds) == 7
    assert np.all(ds.theta == ds.theta[0])
    assert np.ptp(ds.theta[0]) < 1e-12


def test_default_trajectory(params, box):
    spec = default_test_trajectory(params)
    assert spec.within(box)
    ds = generate_trajectory(params, spec)
    assert len(ds) == 802
    z, b, g = spec.poses()
    np.testing.assert_array_equal(ds.target, np.column_stack([b, g, z]))


def test_trajectory_replay_through_fk(params, z0):
    ds = generate_trajectory(params, TrajectorySpec(np.radians(4.0), np.radians(6.0), 8.0, z0, 40.0, 80))
    sols = fk_trajectory(params, ds.theta)
    got = np.array([[s.pose.beta, s.pose.gamma, s.pose.z_p] for s in sols])
    np.testing.assert_allclose(got, ds.target, atol=1e-6)


def test_trajectory_out_of_workspace(params, z0):
    with pytest.raises(WorkspaceViolation) as info:
        generate_trajectory(params, TrajectorySpec(0.0, 0.0, 500.0, z0, 20.0, 20))
    assert info.value.fields["step"] > 0


@pytest.mark.parametrize("kw", [dict(length=1), dict(period=0.0), dict(amp_z=-1.0)])
def test_trajectory_spec_validation(kw, z0):
    base = dict(amp_beta=0.0, amp_gamma=0.0, amp_z=0.0, z0=z0, period=10.0, length=10)
    with pytest.raises(ValueError):
        TrajectorySpec(**{**base, **kw})


def test_empty_dataset():
    with pytest.raises(EmptyDataset):
        Dataset(np.zeros((0, 3)), np.zeros((0, 3)))


def test_csv_round_trip(params, tmp_path):
    ds = generate_uniform(params, 300, seed=4)
    path = tmp_path / "d.csv"
    save_csv(ds, path)
    back = load_csv(path)
    np.testing.assert_array_equal(back.theta, ds.theta)
    np.testing.assert_array_equal(back.target, ds.target)
    assert back.params_fingerprint == ds.params_fingerprint
    assert path.read_text().splitlines()[0] == CSV_HEADER


def test_csv_byte_identical(params, tmp_path):
    for name in ("a.csv", "b.csv"):
        save_csv(generate_uniform(params, 100, seed=9), tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def _write(tmp_path, rows):
    path = tmp_path / "bad.csv"
    path.write_text("\n".join([CSV_HEADER] + rows) + "\n")
    return path


def test_csv_wrong_column_count(tmp_path):
    path = _write(tmp_path, ["2.5,2.5,2.5,0,0,190", "2.5,2.5,2.5,0,0"])
    with pytest.raises(FormatError) as info:
        load_csv(path)
    assert info.value.fields["line"] == 3


def test_csv_theta_off_branch(tmp_path):
    t = np.radians(80.0)
    path = _write(tmp_path, [f"{t},2.5,2.5,0,0,190"])
    with pytest.raises(FormatError):
        load_csv(path)


def test_csv_bad_header_and_value(tmp_path):
    bad = tmp_path / "h.csv"
    bad.write_text("a,b,c\n")
    with pytest.raises(FormatError):
        load_csv(bad)
    with pytest.raises(FormatError):
        load_csv(_write(tmp_path, ["2.5,2.5,x,0,0,190"]))


def test_csv_missing_file(tmp_path):
    with pytest.raises(IoError):
        load_csv(tmp_path / "missing.csv")
