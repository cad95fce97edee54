"""Numerical forward kinematics by damped Newton iteration on the six chain constraints.

Unknowns are ``u = (phi_1, phi_2, phi_3, z_p, beta, gamma)``; the motor angles
theta are given. This solver is the ground truth the learned estimators are
checked against, so it deliberately uses a finite-difference Jacobian rather
than hand-derived derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NoConvergence, SingularJacobian
from .geometry import Pose, RobotParams, all_residuals, derive_translation, neutral_height
from .ik import solve_ik

FD_STEP = 1e-6
MAX_HALVINGS = 20
COND_LIMIT = 1e12


@dataclass(frozen=True)
class FkProblem:
    params: RobotParams
    theta: tuple[float, float, float]
    initial_guess: tuple[float, ...] | None = None
    tol: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class FkSolution:
    phi: np.ndarray
    pose: Pose
    iterations: int
    residual_norm: float
    branch_valid: bool
    history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def u(self) -> np.ndarray:
        return np.concatenate([self.phi, [self.pose.z_p, self.pose.beta, self.pose.gamma]])


def fk_residual(params: RobotParams, theta, u) -> np.ndarray:
    """Six constraint residuals (mm^2) at unknowns ``u`` for motor angles ``theta``."""
    u = np.asarray(u, dtype=float)
    return all_residuals(params, theta, u[..., :3], u[..., 3], u[..., 4], u[..., 5])


def fd_jacobian(params: RobotParams, theta, u, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of :func:`fk_residual` with respect to ``u``."""
    u = np.asarray(u, dtype=float)
    # all 12 perturbed points in one vectorised residual call
    offsets = np.concatenate([np.eye(6), -np.eye(6)]) * step
    vals = fk_residual(params, theta, u + offsets)
    return ((vals[:6] - vals[6:]) / (2.0 * step)).T


@lru_cache(maxsize=32)
def neutral_guess(params: RobotParams) -> tuple[float, ...]:
    """Unknown vector of the home pose, the default Newton starting point."""
    sol = solve_ik(params, neutral_height(params), 0.0, 0.0)
    return tuple(sol.phi) + (sol.pose.z_p, 0.0, 0.0)


def _branch_valid(theta) -> bool:
    theta = np.asarray(theta)
    return bool(np.all((theta > np.pi / 2) & (theta < np.pi)))


def _finish(params, theta, u, iterations, norm, history) -> FkSolution:
    return FkSolution(
        phi=np.mod(u[:3] + np.pi, 2.0 * np.pi) - np.pi,
        pose=derive_translation(params, u[3], u[4], u[5]),
        iterations=iterations,
        residual_norm=float(norm),
        branch_valid=_branch_valid(theta),
        history=tuple(history),
    )


def fk_solve(problem: FkProblem) -> FkSolution:
    params = problem.params
    theta = np.asarray(problem.theta, dtype=float)
    guess = problem.initial_guess if problem.initial_guess is not None else neutral_guess(params)
    u = np.array(guess, dtype=float)
    if u.shape != (6,) or not np.all(np.isfinite(u)):
        raise ValueError("initial guess must be six finite numbers")

    f = fk_residual(params, theta, u)
    norm = np.linalg.norm(f)
    history = [norm]
    for it in range(problem.max_iter + 1):
        if norm < problem.tol:
            return _finish(params, theta, u, it, norm, history)
        if it == problem.max_iter:
            break
        J = fd_jacobian(params, theta, u)
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > COND_LIMIT:
            raise SingularJacobian("Jacobian ill-conditioned", iterate=u.copy(), iteration=it)
        step = np.linalg.solve(J, -f)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = u + t * step
            f_trial = fk_residual(params, theta, trial)
            norm_trial = np.linalg.norm(f_trial)
            if norm_trial < norm:
                break
            t *= 0.5
        else:
            # no decrease: either at the rounding floor or genuinely stuck
            raise NoConvergence(
                "step halving failed", best=_finish(params, theta, u, it, norm, history), iteration=it
            )
        u, f, norm = trial, f_trial, norm_trial
        history.append(norm)
    raise NoConvergence(
        "iteration limit reached", best=_finish(params, theta, u, problem.max_iter, norm, history)
    )


def fk_trajectory(params: RobotParams, thetas, seed_guess=None, tol: float = 1e-10, max_iter: int = 100):
    """Solve FK along a sequence of motor angles, warm-starting each step."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 2 or len(thetas) == 0:
        raise ValueError("thetas must be a nonempty (N, 3) sequence")
    out = []
    guess = seed_guess
    for i, theta in enumerate(thetas):
        try:
            sol = fk_solve(FkProblem(params, tuple(theta), guess, tol, max_iter))
        except NoConvergence as exc:
            exc.fields["index"] = i
            raise
        out.append(sol)
        guess = tuple(sol.u)
    return out
