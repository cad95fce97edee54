"""Closed-form inverse kinematics: pose -> motor angles theta_i and passive angles phi_i.

Each chain's two constraints are circles in the planar coordinates (z1, z2) of
joint Q_i. Their intersection gives the candidate Q_i positions; a planar
two-link inversion from S_i then yields (theta_i, phi_i). Only solutions with
theta_i in (90 deg, 180 deg) are admissible.

The solver core works on arrays so datasets of a few hundred thousand poses
can be generated without a Python loop; the scalar functions are thin wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchViolation, NoIntersection, OutOfReach, WorkspaceViolation
from .geometry import (
    CHAIN_SIGN,
    CHAINS,
    Pose,
    RobotParams,
    all_residuals,
    derive_translation,
    planar_point,
    raw_coefficients,
)

TANGENT_TOL = 1e-9

# status codes of the batch solver
OK, NO_INTERSECTION, OUT_OF_REACH, NO_BRANCH = 0, 1, 2, 3


def _wrap(angle):
    return np.mod(angle + np.pi, 2.0 * np.pi) - np.pi


def _intersect_batch(c1x, c1y, r1, c2x, c2y, r2):
    """Vectorised circle intersection.

    Returns ``(p, q, ok)`` where ``p`` and ``q`` are arrays of shape (..., 2)
    holding the two roots (identical for tangency) and ``ok`` marks inputs that
    intersect at all.
    """
    dx, dy = c2x - c1x, c2y - c1y
    d = np.hypot(dx, dy)
    scale = np.maximum(r1, r2)
    tol = TANGENT_TOL * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (r1**2 - r2**2 + d**2) / (2.0 * d)
        h2 = r1**2 - a**2
        ok = (d > 0) & np.isfinite(a) & (h2 > -(tol**2))
        # merge near-double roots (root separation 2h below tol)
        half = np.where(ok & (h2 > (0.5 * tol) ** 2), np.sqrt(np.clip(h2, 0.0, None)), 0.0)
        ux, uy = dx / d, dy / d
    mx, my = c1x + a * ux, c1y + a * uy
    p = np.stack([mx - half * uy, my + half * ux], axis=-1)
    q = np.stack([mx + half * uy, my - half * ux], axis=-1)
    return p, q, ok


def intersect_circles(c1, r1: float, c2, r2: float) -> list[np.ndarray]:
    """All intersection points of two circles (one point when tangent)."""
    if r1 < 0 or r2 < 0:
        raise ValueError("radii must be non-negative")
    p, q, ok = _intersect_batch(float(c1[0]), float(c1[1]), float(r1), float(c2[0]), float(c2[1]), float(r2))
    if not ok:
        raise NoIntersection("circles do not intersect")
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if np.linalg.norm(p - q) < TANGENT_TOL * max(r1, r2):
        return [0.5 * (p + q)]
    return [p, q]


def _two_link_batch(z1, z2, l1, l2):
    """Both elbow branches of the planar two-link inversion.

    Returns ``(theta, phi, ok)`` with a trailing axis of 2 on theta and phi
    (phi >= 0 first, then phi <= 0).
    """
    r2 = z1**2 + z2**2
    c = (r2 - l1**2 - l2**2) / (2.0 * l1 * l2)
    ok = np.abs(c) <= 1.0 + 1e-12
    phi_pos = np.arccos(np.clip(c, -1.0, 1.0))
    phi = np.stack([phi_pos, -phi_pos], axis=-1)
    base = np.arctan2(z2, z1)[..., None]
    theta = _wrap(base - np.arctan2(l2 * np.sin(phi), l1 + l2 * np.cos(phi)))
    return theta, phi, ok


def two_link_ik(z1: float, z2: float, l1: float, l2: float) -> list[tuple[float, float]]:
    """Joint pairs (theta, phi) placing a two-link arm's tip at (z1, z2)."""
    if l1 <= 0 or l2 <= 0:
        raise ValueError("link lengths must be positive")
    theta, phi, ok = _two_link_batch(np.float64(z1), np.float64(z2), l1, l2)
    if not ok:
        raise OutOfReach("target outside annulus", reach=l1 + l2)
    pairs = [(float(theta[0]), float(phi[0]))]
    if abs(phi[0]) > 1e-12:
        pairs.append((float(theta[1]), float(phi[1])))
    return pairs


@dataclass(frozen=True)
class ChainSolution:
    chain_index: int
    theta: float
    phi: float
    q_planar: tuple[float, float]
    branch_tag: str


@dataclass(frozen=True)
class IkSolution:
    pose: Pose
    chains: tuple[ChainSolution, ChainSolution, ChainSolution]

    @property
    def theta(self) -> np.ndarray:
        return np.array([c.theta for c in self.chains])

    @property
    def phi(self) -> np.ndarray:
        return np.array([c.phi for c in self.chains])

    def residuals(self, params: RobotParams) -> np.ndarray:
        p = self.pose
        return all_residuals(params, self.theta, self.phi, p.z_p, p.beta, p.gamma)


def solve_chain_batch(params: RobotParams, z_p, beta, gamma, chain_index: int):
    """Solve one chain for arrays of poses.

    Returns a dict of arrays: ``theta``, ``phi``, ``z1``, ``z2``, ``root``
    (which circle root, 0 or 1), ``elbow`` (0 for phi >= 0, 1 for phi <= 0) and
    ``status`` (OK, NO_INTERSECTION, OUT_OF_REACH or NO_BRANCH).
    """
    z_p, beta, gamma = np.broadcast_arrays(
        np.asarray(z_p, dtype=float), np.asarray(beta, dtype=float), np.asarray(gamma, dtype=float)
    )
    a1, a2, a3, a4, a5, a6 = raw_coefficients(params, z_p, beta, gamma, chain_index)
    s = CHAIN_SIGN[chain_index]
    reachable = (a3 >= 0) & (a6 >= 0)
    r1 = np.sqrt(np.clip(a3, 0.0, None))
    r2 = np.sqrt(np.clip(a6, 0.0, None))
    p, q, hit = _intersect_batch(-s * a1, a2, r1, -s * a4, a5, r2)
    hit &= reachable

    roots = np.stack([p, q], axis=-2)  # (..., root, 2)
    theta, phi, arm_ok = _two_link_batch(roots[..., 0], roots[..., 1], params.l_KS, params.l_KQ)
    # candidates indexed (..., root, elbow)
    z2 = np.broadcast_to(roots[..., 1][..., None], theta.shape)
    valid = hit[..., None, None] & arm_ok[..., None] & (theta > np.pi / 2) & (theta < np.pi)

    # larger z2 wins, then larger theta; fold into one score
    score = np.where(valid, z2, -np.inf)
    flat_score = score.reshape(score.shape[:-2] + (4,))
    flat_theta = theta.reshape(flat_score.shape)
    best_z2 = flat_score.max(axis=-1, keepdims=True)
    tie = np.isfinite(flat_score) & (flat_score >= best_z2 - 1e-9 * params.reach)
    pick = np.argmax(np.where(tie, flat_theta, -np.inf), axis=-1)

    take = lambda arr: np.take_along_axis(arr.reshape(flat_score.shape), pick[..., None], axis=-1)[..., 0]
    any_valid = np.isfinite(best_z2[..., 0])
    reach = hit & np.any(arm_ok, axis=-1)
    status = np.where(
        ~hit, NO_INTERSECTION, np.where(~reach, OUT_OF_REACH, np.where(any_valid, OK, NO_BRANCH))
    )
    th = np.where(status == OK, take(theta), np.nan)
    ph = np.where(status == OK, take(phi), np.nan)
    z1_sel, z2_sel = planar_point(params, th, ph)
    return {
        "theta": th,
        "phi": ph,
        "z1": z1_sel,
        "z2": z2_sel,
        "root": pick // 2,
        "elbow": pick % 2,
        "status": status,
    }


def solve_chain(params: RobotParams, pose: Pose, chain_index: int) -> ChainSolution:
    sol = solve_chain_batch(params, pose.z_p, pose.beta, pose.gamma, chain_index)
    status = int(sol["status"])
    if status == NO_INTERSECTION:
        raise WorkspaceViolation("constraint circles do not intersect", chain=chain_index)
    if status == OUT_OF_REACH:
        raise WorkspaceViolation("Q out of reach of the two-link arm", chain=chain_index)
    if status == NO_BRANCH:
        raise BranchViolation("no solution with theta in (90, 180) deg", chain=chain_index)
    return ChainSolution(
        chain_index=chain_index,
        theta=float(sol["theta"]),
        phi=float(sol["phi"]),
        q_planar=(float(sol["z1"]), float(sol["z2"])),
        branch_tag=f"root{int(sol['root'])}-elbow{'+-'[int(sol['elbow'])]}",
    )


def solve_ik(params: RobotParams, z_p: float, beta: float, gamma: float) -> IkSolution:
    """Motor and passive angles of all three chains for the pose (z_p, beta, gamma)."""
    if not all(np.isfinite(v) for v in (z_p, beta, gamma)):
        raise ValueError("pose values must be finite")
    pose = derive_translation(params, z_p, beta, gamma)
    chains = tuple(solve_chain(params, pose, i) for i in CHAINS)
    return IkSolution(pose=pose, chains=chains)


def solve_ik_batch(params: RobotParams, z_p, beta, gamma):
    """Vectorised IK over arrays of poses.

    Returns ``(theta, phi, status)`` where theta and phi have shape (N, 3) and
    ``status`` has shape (N, 3) with one code per chain. Rows with any nonzero
    status hold NaN angles.
    """
    z_p, beta, gamma = (np.ravel(np.asarray(v, dtype=float)) for v in np.broadcast_arrays(z_p, beta, gamma))
    sols = [solve_chain_batch(params, z_p, beta, gamma, i) for i in CHAINS]
    theta = np.stack([s["theta"] for s in sols], axis=-1)
    phi = np.stack([s["phi"] for s in sols], axis=-1)
    status = np.stack([s["status"] for s in sols], axis=-1)
    return theta, phi, status
