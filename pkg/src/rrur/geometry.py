"""Frames, rotation matrix and per-chain constraint coefficients of the 3-RRUR brace.

Units are millimetres and radians throughout. Frame O is the base frame, frame P
the end-effector (brace) frame. The axial rotation is fixed to zero, so a pose
is fully described by ``(z_p, beta, gamma)``; ``x_p`` and ``y_p`` follow from
the planar constraints on the intermediate points ``A_i``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError

CHAINS = (1, 2, 3)

# sign with which the planar coordinate z1 enters the chain constraints
CHAIN_SIGN = {1: 1.0, 2: 1.0, 3: -1.0}


@dataclass(frozen=True)
class RobotParams:
    """Geometric constants shared by the three identical chains (mm)."""

    r_A: float
    r_S: float
    r_E: float
    h: float
    l_QA: float
    l_QE: float
    l_KS: float
    l_KQ: float
    l_EA: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{f.name} must be a positive finite length, got {value!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "RobotParams":
        missing = [f.name for f in fields(cls) if f.name not in data]
        if missing:
            raise ValueError(f"missing parameter keys: {', '.join(missing)}")
        return cls(**{f.name: float(data[f.name]) for f in fields(cls)})

    def to_dict(self) -> dict:
        return asdict(self)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def reach(self) -> float:
        return self.l_KS + self.l_KQ


def load_params(path: str | Path | None = None, check: bool = True) -> RobotParams:
    """Load parameters from a JSON file, or the bundled prototype values.

    With ``check`` the neutral pose is solved once so that a parameter set
    whose chains cannot even reach the home configuration is rejected early.
    """
    if path is None:
        text = resources.files("rrur.resources").joinpath("prototype_params.json").read_text()
    else:
        text = Path(path).read_text()
    params = RobotParams.from_dict(json.loads(text))
    if check:
        from .ik import solve_ik  # geometry must not depend on ik at import time

        try:
            solve_ik(params, neutral_height(params), 0.0, 0.0)
        except Exception as exc:
            raise ValueError(f"neutral pose unreachable with these parameters: {exc}") from exc
    return params


def default_params() -> RobotParams:
    return load_params(None, check=False)


# Sampling box, as fractions of (l_KS + l_KQ + h) for z_p and radians for the
# angles. It lies inside the singularity-free region around the home pose:
# past its edges det(d theta / d pose) changes sign, theta -> pose stops being
# one-to-one and neither the Newton oracle nor a regressor can tell the
# branches apart.
BOX_Z_FRACTION = (0.855, 0.97)
BOX_BETA = (np.radians(-6.0), np.radians(8.0))
BOX_GAMMA = (np.radians(-9.0), np.radians(9.0))
HOME_Z_FRACTION = 0.92


def neutral_height(params: RobotParams) -> float:
    """Home height of the brace, inside the sampling box."""
    return HOME_Z_FRACTION * (params.reach + params.h)


def workspace_box(params: RobotParams):
    """Sampling box ``((z_lo, z_hi), (b_lo, b_hi), (g_lo, g_hi))`` in mm and rad."""
    span = params.reach + params.h
    return (BOX_Z_FRACTION[0] * span, BOX_Z_FRACTION[1] * span), BOX_BETA, BOX_GAMMA


def rotation_312(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Space-three 3-1-2 rotation from frame P to frame O."""
    sa, ca = np.sin(alpha), np.cos(alpha)
    sb, cb = np.sin(beta), np.cos(beta)
    sg, cg = np.sin(gamma), np.cos(gamma)
    return np.array(
        [
            [sa * sb * sg + cg * ca, ca * sb * sg - cg * sa, cb * sg],
            [sa * cb, ca * cb, -sb],
            [sa * sb * cg - sg * ca, ca * sb * cg + sg * sa, cb * cg],
        ]
    )


def x_translation(params: RobotParams, beta, gamma):
    return params.h * np.cos(beta) * np.sin(gamma) - params.r_A * np.sin(beta) * np.sin(gamma)


def y_translation(params: RobotParams, beta):
    return -params.h * np.sin(beta)


@dataclass(frozen=True)
class Pose:
    """End-effector pose. Build it with :func:`derive_translation`."""

    z_p: float
    beta: float
    gamma: float
    x_p: float
    y_p: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x_p, self.y_p, self.z_p])

    @property
    def actuated(self) -> tuple[float, float, float]:
        return (self.z_p, self.beta, self.gamma)


def derive_translation(params: RobotParams, z_p: float, beta: float, gamma: float) -> Pose:
    return Pose(
        z_p=float(z_p),
        beta=float(beta),
        gamma=float(gamma),
        x_p=float(x_translation(params, beta, gamma)),
        y_p=float(y_translation(params, beta)),
    )


def _p_points(radius: float, z: float) -> np.ndarray:
    return np.array([[radius, 0.0, z], [0.0, radius, z], [-radius, 0.0, z]])


def intermediate_points(params: RobotParams, pose: Pose) -> np.ndarray:
    """Base-frame coordinates of A_1, A_2, A_3 as rows of a (3, 3) array."""
    R = rotation_312(0.0, pose.beta, pose.gamma)
    return pose.position + _p_points(params.r_A, -params.h) @ R.T


def end_points(params: RobotParams, pose: Pose) -> np.ndarray:
    """Base-frame coordinates of E_1, E_2, E_3 (E-plane is z = 0 in frame P)."""
    R = rotation_312(0.0, pose.beta, pose.gamma)
    return pose.position + _p_points(params.r_E, 0.0) @ R.T


@dataclass(frozen=True)
class ChainCoefficients:
    chain_index: int
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float

    @property
    def sign(self) -> float:
        return CHAIN_SIGN[self.chain_index]

    def as_tuple(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a5, self.a6)


def raw_coefficients(params: RobotParams, z_p, beta, gamma, chain_index: int):
    """Six constraint coefficients of one chain, broadcasting over array inputs.

    No reachability check is made: ``a3`` may come out negative for poses the
    chain cannot reach, which the residual functions need to see unchanged.
    """
    p = params
    sb, cb = np.sin(beta), np.cos(beta)
    sg, cg = np.sin(gamma), np.cos(gamma)
    x_p = x_translation(p, beta, gamma)
    y_p = y_translation(p, beta)
    if chain_index == 1:
        a1 = x_p + p.r_E * cg - p.r_S
        a2 = z_p - p.r_E * sg
        a3 = p.l_QE**2 - y_p**2
        a4 = x_p + p.r_A * cg - p.h * cb * sg - p.r_S
        a5 = z_p - p.r_A * sg - p.h * cb * cg
    elif chain_index == 2:
        a1 = y_p + p.r_E * cb - p.r_S
        a2 = z_p + p.r_E * sb * cg
        a3 = p.l_QE**2 - (x_p + p.r_E * sb * sg) ** 2
        a4 = p.r_A * cb - p.r_S
        a5 = z_p + p.r_A * sb * cg - p.h * cb * cg
    elif chain_index == 3:
        a1 = x_p - p.r_E * cg + p.r_S
        a2 = z_p + p.r_E * sg
        a3 = p.l_QE**2 - y_p**2
        a4 = x_p - p.r_A * cg - p.h * cb * sg + p.r_S
        a5 = z_p + p.r_A * sg - p.h * cb * cg
    else:
        raise ValueError(f"chain_index must be 1, 2 or 3, got {chain_index!r}")
    a6 = np.full_like(np.asarray(a5, dtype=float), p.l_QA**2)
    return a1, a2, a3, a4, a5, a6


def chain_coefficients(params: RobotParams, pose: Pose, chain_index: int) -> ChainCoefficients:
    coeffs = [float(c) for c in raw_coefficients(params, pose.z_p, pose.beta, pose.gamma, chain_index)]
    if coeffs[2] < 0 or coeffs[5] < 0:
        raise DomainError("squared radius negative", chain=chain_index)
    return ChainCoefficients(chain_index, *coeffs)


def planar_point(params: RobotParams, theta, phi):
    """Planar coordinates (z1, z2) of Q for joint angles (theta, phi)."""
    z1 = params.l_KS * np.cos(theta) + params.l_KQ * np.cos(theta + phi)
    z2 = params.l_KS * np.sin(theta) + params.l_KQ * np.sin(theta + phi)
    return z1, z2


def chain_residuals(params: RobotParams, chain_index: int, theta, phi, z_p, beta, gamma):
    """The two constraint residuals ``(f1, f2)`` of one chain, in mm^2."""
    a1, a2, a3, a4, a5, a6 = raw_coefficients(params, z_p, beta, gamma, chain_index)
    z1, z2 = planar_point(params, theta, phi)
    s = CHAIN_SIGN[chain_index]
    f1 = (a1 + s * z1) ** 2 + (a2 - z2) ** 2 - a3
    f2 = (a4 + s * z1) ** 2 + (a5 - z2) ** 2 - a6
    return f1, f2


def all_residuals(params: RobotParams, theta, phi, z_p, beta, gamma) -> np.ndarray:
    """Stack of the six residuals; ``theta``/``phi`` have a trailing axis of 3.

    Output shape is ``(..., 6)`` ordered chain by chain: (f1, f2) of chain 1,
    then chain 2, then chain 3.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    out = []
    for k, chain in enumerate(CHAINS):
        out.extend(chain_residuals(params, chain, theta[..., k], phi[..., k], z_p, beta, gamma))
    return np.stack(np.broadcast_arrays(*out), axis=-1)
