import numpy as np
import pytest

from rrur.errors import NoConvergence, SingularJacobian
from rrur.fk import FkProblem, fd_jacobian, fk_residual, fk_solve, fk_trajectory, neutral_guess
from rrur.ik import solve_ik, solve_ik_batch


def _pose(sol):
    return np.array([sol.pose.z_p, sol.pose.beta, sol.pose.gamma])


def test_neutral_round_trip(params, z0):
    ik = solve_ik(params, z0, 0.0, 0.0)
    sol = fk_solve(FkProblem(params, tuple(ik.theta)))
    assert sol.iterations <= 3
    np.testing.assert_allclose(_pose(sol), [z0, 0.0, 0.0], atol=1e-9)
    assert sol.branch_valid


def test_random_round_trips(params, box):
    rng = np.random.default_rng(5)
    for _ in range(50):
        z, b, g = (rng.uniform(lo, hi) for lo, hi in box)
        ik = solve_ik(params, z, b, g)
        sol = fk_solve(FkProblem(params, tuple(ik.theta)))
        assert np.max(np.abs(_pose(sol) - [z, b, g])) < 1e-6
        np.testing.assert_allclose(sol.phi, ik.phi, atol=1e-6)
        assert sol.residual_norm < 1e-10


def test_zero_theta_is_flagged(params):
    try:
        sol = fk_solve(FkProblem(params, (0.0, 0.0, 0.0)))
    except (NoConvergence, SingularJacobian):
        return
    assert not sol.branch_valid


def test_no_convergence_carries_best(params, z0):
    ik = solve_ik(params, z0, np.radians(4.0), np.radians(-6.0))
    with pytest.raises(NoConvergence) as info:
        fk_solve(FkProblem(params, tuple(ik.theta), tol=1e-30, max_iter=2))
    best = info.value.best
    assert best is not None and np.isfinite(best.residual_norm)


def test_history_decreases(params, z0):
    ik = solve_ik(params, z0 + 8.0, np.radians(6.0), np.radians(-8.0))
    sol = fk_solve(FkProblem(params, tuple(ik.theta)))
    h = np.array(sol.history)
    assert np.all(np.diff(h) < 0)
    assert h[-1] < 1e-10


def test_fd_jacobian_matches_richardson(params, z0):
    ik = solve_ik(params, z0, np.radians(3.0), np.radians(2.0))
    u = np.concatenate([ik.phi, [z0 + 1.0, 0.05, 0.03]])
    J = fd_jacobian(params, ik.theta, u)
    d1 = fd_jacobian(params, ik.theta, u, step=1e-3)
    d2 = fd_jacobian(params, ik.theta, u, step=5e-4)
    J_ref = (4.0 * d2 - d1) / 3.0
    assert np.max(np.abs(J - J_ref)) / np.max(np.abs(J_ref)) < 1e-5


def test_residual_zero_at_ik_solution(params, z0):
    ik = solve_ik(params, z0, np.radians(-3.0), np.radians(5.0))
    u = np.concatenate([ik.phi, [z0, np.radians(-3.0), np.radians(5.0)]])
    assert np.max(np.abs(fk_residual(params, ik.theta, u))) < 1e-9


def test_bad_guess(params):
    with pytest.raises(ValueError):
        fk_solve(FkProblem(params, (2.5, 2.5, 2.5), initial_guess=(0.0,) * 5))
    with pytest.raises(ValueError):
        FkProblem(params, (2.5, 2.5, 2.5), tol=0.0)


def test_constant_sequence_warm_start(params, z0):
    ik = solve_ik(params, z0, np.radians(2.0), np.radians(3.0))
    sols = fk_trajectory(params, np.tile(ik.theta, (5, 1)))
    for s in sols[1:]:
        assert s.iterations <= 1
        np.testing.assert_allclose(_pose(s), _pose(sols[0]), atol=1e-12)


def test_trajectory_oracle(params, z0):
    t = np.arange(60)
    b, g = np.radians(5.0) * np.sin(2 * np.pi * t / 30), np.radians(8.0) * np.cos(2 * np.pi * t / 30)
    z = z0 + 10.0 * np.sin(2 * np.pi * t / 30)
    theta, _, status = solve_ik_batch(params, z, b, g)
    assert np.all(status == 0)
    fwd = np.array([_pose(s) for s in fk_trajectory(params, theta)])
    np.testing.assert_allclose(fwd, np.column_stack([z, b, g]), atol=1e-6)
    rev = np.array([_pose(s) for s in fk_trajectory(params, theta[::-1])])
    np.testing.assert_allclose(rev, fwd[::-1], atol=1e-6)


def test_trajectory_failure_reports_index(params, z0):
    ik = solve_ik(params, z0, 0.0, 0.0)
    with pytest.raises(NoConvergence) as info:
        fk_trajectory(params, np.tile(ik.theta, (3, 1)), seed_guess=neutral_guess(params), tol=1e-30, max_iter=1)
    assert info.value.fields["index"] == 0


def test_trajectory_rejects_empty(params):
    with pytest.raises(ValueError):
        fk_trajectory(params, np.zeros((0, 3)))
