"""Supervised datasets (motor angles -> pose) generated from the closed-form IK.

Targets are ordered ``(beta, gamma, z_p)``. Samples are stored column-wise in
two ``(N, 3)`` arrays; :class:`Sample` views are produced on demand.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, FormatError, IoError, WorkspaceViolation
from .geometry import CHAIN_SIGN, CHAINS, RobotParams, all_residuals, raw_coefficients, workspace_box
from .ik import NO_BRANCH, _intersect_batch, solve_ik_batch

log = logging.getLogger(__name__)

CSV_HEADER = "theta1_rad,theta2_rad,theta3_rad,beta_rad,gamma_rad,zp_mm"
N_COLUMNS = 6


@dataclass(frozen=True)
class Sample:
    theta: tuple[float, float, float]
    target: tuple[float, float, float]  # (beta, gamma, z_p)


@dataclass
class Dataset:
    theta: np.ndarray
    target: np.ndarray
    params_fingerprint: str | None = None
    grid_spec: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.ascontiguousarray(self.theta, dtype=float).reshape(-1, 3)
        self.target = np.ascontiguousarray(self.target, dtype=float).reshape(-1, 3)
        if len(self.theta) != len(self.target):
            raise ValueError("theta and target must have the same number of rows")
        if len(self.theta) == 0:
            raise EmptyDataset("dataset has no samples")

    def __len__(self):
        return len(self.theta)

    def __getitem__(self, i) -> Sample:
        return Sample(tuple(self.theta[i]), tuple(self.target[i]))

    @property
    def samples(self) -> list[Sample]:
        return [self[i] for i in range(len(self))]

    @property
    def beta(self):
        return self.target[:, 0]

    @property
    def gamma(self):
        return self.target[:, 1]

    @property
    def z_p(self):
        return self.target[:, 2]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.theta[idx], self.target[idx], self.params_fingerprint, dict(self.grid_spec))


def _from_poses(params: RobotParams, z, beta, gamma, meta: dict) -> tuple[Dataset, np.ndarray]:
    theta, _, status = solve_ik_batch(params, z, beta, gamma)
    ok = np.all(status == 0, axis=1)
    target = np.stack([beta, gamma, z], axis=1)
    if not ok.any():
        raise EmptyDataset("no pose in the requested range is reachable")
    meta = dict(meta, n_requested=int(len(z)), n_skipped=int((~ok).sum()))
    if (~ok).any():
        meta["skipped_bounds"] = {
            "zp_mm": [float(z[~ok].min()), float(z[~ok].max())],
            "beta_rad": [float(beta[~ok].min()), float(beta[~ok].max())],
            "gamma_rad": [float(gamma[~ok].min()), float(gamma[~ok].max())],
        }
    ds = Dataset(theta[ok], target[ok], params.fingerprint(), meta)
    return ds, status


def axis_points(lo: float, hi: float, step: float) -> np.ndarray:
    """Inclusive arithmetic grid ``lo, lo + step, ...`` up to ``hi``."""
    if step <= 0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError("empty range")
    n = int(np.floor((hi - lo) / step * (1 + 1e-12) + 1e-9)) + 1
    return lo + step * np.arange(n)


def generate_grid(params: RobotParams, z_range, beta_range, gamma_range) -> Dataset:
    """IK over the Cartesian grid of ``(lo, hi, step)`` ranges, row-major in (z, beta, gamma).

    Unreachable points are dropped and counted in ``grid_spec``.
    """
    axes = [axis_points(*r) for r in (z_range, beta_range, gamma_range)]
    Z, B, G = (a.ravel() for a in np.meshgrid(*axes, indexing="ij"))
    meta = {
        "mode": "grid",
        "z_range": list(map(float, z_range)),
        "beta_range": list(map(float, beta_range)),
        "gamma_range": list(map(float, gamma_range)),
        "shape": [len(a) for a in axes],
    }
    ds, _ = _from_poses(params, Z, B, G, meta)
    log.info("grid: %d samples, %d skipped", len(ds), ds.grid_spec["n_skipped"])
    return ds


def box_grid(params: RobotParams, n_per_axis: int = 63) -> Dataset:
    """Grid with ``n_per_axis`` points along each axis of the sampling box."""
    ranges = [(lo, hi, (hi - lo) / (n_per_axis - 1)) for lo, hi in workspace_box(params)]
    return generate_grid(params, *ranges)


def generate_uniform(params: RobotParams, n: int, seed: int, box=None) -> Dataset:
    """Seeded uniform sampling of the box (reachable draws only)."""
    rng = np.random.default_rng(seed)
    box = box or workspace_box(params)
    z, beta, gamma = (rng.uniform(lo, hi, n) for lo, hi in box)
    ds, _ = _from_poses(params, z, beta, gamma, {"mode": "uniform", "seed": int(seed), "box": [list(b) for b in box]})
    return ds


@dataclass(frozen=True)
class TrajectorySpec:
    amp_beta: float  # rad
    amp_gamma: float  # rad
    amp_z: float  # mm
    z0: float  # mm
    period: float  # steps
    length: int

    def __post_init__(self):
        if self.length < 2:
            raise ValueError("trajectory length must be at least 2")
        if self.period <= 0:
            raise ValueError("period must be positive")
        if min(self.amp_beta, self.amp_gamma, self.amp_z) < 0:
            raise ValueError("amplitudes must be non-negative")

    def poses(self):
        t = np.arange(self.length)
        w = 2.0 * np.pi * t / self.period
        beta = self.amp_beta * np.sin(w)
        gamma = self.amp_gamma * np.cos(w)
        z = self.z0 + self.amp_z * np.sin(w)
        return z, beta, gamma

    def within(self, box) -> bool:
        (zl, zh), (bl, bh), (gl, gh) = box
        return (
            zl <= self.z0 - self.amp_z
            and self.z0 + self.amp_z <= zh
            and bl <= -self.amp_beta
            and self.amp_beta <= bh
            and gl <= -self.amp_gamma
            and self.amp_gamma <= gh
        )


def default_test_trajectory(params: RobotParams, length: int = 802) -> TrajectorySpec:
    """Two periods of a head-nodding/tilting motion around the home pose."""
    from .geometry import neutral_height

    return TrajectorySpec(
        amp_beta=np.radians(5.0),
        amp_gamma=np.radians(8.0),
        amp_z=10.0,
        z0=neutral_height(params),
        period=length / 2,
        length=length,
    )


def generate_trajectory(params: RobotParams, spec: TrajectorySpec) -> Dataset:
    z, beta, gamma = spec.poses()
    theta, _, status = solve_ik_batch(params, z, beta, gamma)
    bad = np.flatnonzero(np.any(status != 0, axis=1))
    if len(bad):
        step = int(bad[0])
        chain = int(np.flatnonzero(status[step] != 0)[0]) + 1
        kind = "BranchViolation" if status[step, chain - 1] == NO_BRANCH else "WorkspaceViolation"
        raise WorkspaceViolation(f"trajectory leaves the workspace ({kind})", step=step, chain=chain)
    meta = {"mode": "trajectory", **{k: float(v) for k, v in spec.__dict__.items()}}
    return Dataset(theta, np.stack([beta, gamma, z], axis=1), params.fingerprint(), meta)


def recover_phi(params: RobotParams, theta, z_p, beta, gamma) -> np.ndarray:
    """Passive angles consistent with ``theta`` and a pose, chain by chain.

    Q_i is placed on the circle of radius l_KQ around K_i and on the first
    constraint circle of the chain; of the two roots the one that best
    satisfies the second constraint is kept. This does not reuse the IK path
    (which intersects the two constraint circles), so it can re-check samples.
    """
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    for k, chain in enumerate(CHAINS):
        a1, a2, a3, a4, a5, a6 = raw_coefficients(params, z_p, beta, gamma, chain)
        s = CHAIN_SIGN[chain]
        kx = params.l_KS * np.cos(theta[:, k])
        ky = params.l_KS * np.sin(theta[:, k])
        r_kq = np.full_like(kx, params.l_KQ)
        p, q, _ = _intersect_batch(kx, ky, r_kq, -s * a1, a2, np.sqrt(np.clip(a3, 0, None)))
        best = None
        for cand in (p, q):
            f2 = (a4 + s * cand[:, 0]) ** 2 + (a5 - cand[:, 1]) ** 2 - a6
            phi = np.arctan2(cand[:, 1] - ky, cand[:, 0] - kx) - theta[:, k]
            phi = np.mod(phi + np.pi, 2 * np.pi) - np.pi
            if best is None:
                best, best_f2 = phi, np.abs(f2)
            else:
                take = np.abs(f2) < best_f2
                best = np.where(take, phi, best)
                best_f2 = np.where(take, np.abs(f2), best_f2)
        # near-tangent circles leave ~sqrt(eps) error in the root; polish with
        # Gauss-Newton on (f1, f2) in phi alone
        for _ in range(3):
            ang = theta[:, k] + best
            z1 = kx + params.l_KQ * np.cos(ang)
            z2 = ky + params.l_KQ * np.sin(ang)
            dz1, dz2 = -params.l_KQ * np.sin(ang), params.l_KQ * np.cos(ang)
            r = np.stack([(a1 + s * z1) ** 2 + (a2 - z2) ** 2 - a3, (a4 + s * z1) ** 2 + (a5 - z2) ** 2 - a6])
            d = np.stack([
                2 * (a1 + s * z1) * s * dz1 - 2 * (a2 - z2) * dz2,
                2 * (a4 + s * z1) * s * dz1 - 2 * (a5 - z2) * dz2,
            ])
            denom = np.sum(d * d, axis=0)
            best = best - np.where(denom > 0, np.sum(d * r, axis=0) / np.where(denom > 0, denom, 1.0), 0.0)
        out[:, k] = best
    return out


def dataset_residuals(params: RobotParams, dataset: Dataset) -> np.ndarray:
    """Six constraint residuals per sample, shape (N, 6)."""
    b, g, z = dataset.target.T
    phi = recover_phi(params, dataset.theta, z, b, g)
    return all_residuals(params, dataset.theta, phi, z, b, g)


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def save_csv(dataset: Dataset, path) -> None:
    """Write the dataset at 17 significant digits plus a small metadata sidecar."""
    path = Path(path)
    rows = np.hstack([dataset.theta, dataset.target])
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            np.savetxt(fh, rows, fmt="%.17g", delimiter=",")
        meta = {"params_fingerprint": dataset.params_fingerprint, "grid_spec": dataset.grid_spec}
        _meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(str(exc), path=str(path)) from exc


def load_csv(path) -> Dataset:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise IoError(str(exc), path=str(path)) from exc
    if not lines or lines[0].strip() != CSV_HEADER:
        raise FormatError("unexpected header", line=1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != N_COLUMNS:
            raise FormatError(f"expected {N_COLUMNS} columns, got {len(parts)}", line=lineno)
        try:
            values = [float(v) for v in parts]
        except ValueError:
            raise FormatError("non-numeric field", line=lineno) from None
        if not all(np.pi / 2 < v < np.pi for v in values[:3]):
            raise FormatError("motor angle outside (90, 180) deg", line=lineno)
        rows.append(values)
    if not rows:
        raise EmptyDataset("file holds no samples", path=str(path))
    arr = np.array(rows)
    fingerprint, grid_spec = None, {}
    meta_file = _meta_path(path)
    if meta_file.exists():
        meta = json.loads(meta_file.read_text())
        fingerprint, grid_spec = meta.get("params_fingerprint"), meta.get("grid_spec", {})
    return Dataset(arr[:, :3], arr[:, 3:], fingerprint, grid_spec)
