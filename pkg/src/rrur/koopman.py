"""EDMD estimate of the Koopman matrix mapping lifted motor angles to lifted poses.

Inputs ``x = (theta_1, theta_2, theta_3)`` and outputs ``y = (beta, gamma, z_p)``
are scaled per variable and lifted with the Kronecker dictionary
``(1, v, v^2, sin v, cos v)`` of each variable (125 features, variable 1
slowest). With row-vector features, ``Psi(y) ~ Psi(x) @ K`` and

    K = G^+ A,   G = Psi_x^T Psi_x / M,   A = Psi_x^T Psi_y / M.

G is never formed. Its condition number is the square of that of Psi_x, so a
chunked QR of ``[Psi_x | Psi_y]`` is accumulated instead (``G = R^T R / M``)
and the truncated pseudo-inverse is applied through the SVD of R. Singular
values of G below ``svd_threshold * sigma_max(G)`` are discarded.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateData, EigenFailure

N_VARS = 3
N_BASIS = 5
LIFTED_DIM = N_BASIS**N_VARS
# position of the linear monomial of variables 1, 2, 3
LINEAR_INDICES = (N_BASIS**2, N_BASIS, 1)
# inputs are mapped affinely onto [-SCALE_HALF_WIDTH, SCALE_HALF_WIDTH]
SCALE_HALF_WIDTH = np.pi
ORDERING_TAG = "kron(1,v,v^2,sin,cos)^3;var1-slowest"


@dataclass(frozen=True)
class Dictionary:
    n_vars: int = N_VARS
    basis: tuple[str, ...] = ("1", "v", "v^2", "sin v", "cos v")

    @property
    def dim(self) -> int:
        return len(self.basis) ** self.n_vars

    @property
    def linear_indices(self) -> tuple[int, ...]:
        return tuple(len(self.basis) ** (self.n_vars - 1 - k) for k in range(self.n_vars))

    def index(self, *per_var: int) -> int:
        idx = 0
        for i in per_var:
            idx = idx * len(self.basis) + i
        return idx


DICTIONARY = Dictionary()


def _factor(v):
    return np.stack([np.ones_like(v), v, v * v, np.sin(v), np.cos(v)], axis=-1)


def lift(x, dictionary: Dictionary = DICTIONARY) -> np.ndarray:
    """Kronecker lifting of (already scaled) 3-vectors; accepts (3,) or (N, 3)."""
    x = np.asarray(x, dtype=float)
    f1, f2, f3 = _factor(x[..., 0]), _factor(x[..., 1]), _factor(x[..., 2])
    out = f1[..., :, None, None] * f2[..., None, :, None] * f3[..., None, None, :]
    return out.reshape(x.shape[:-1] + (dictionary.dim,))


@dataclass(frozen=True)
class AffineScaling:
    """Per-variable map of ``[lo, hi]`` onto ``[-half_width, half_width]``."""

    lo: np.ndarray
    hi: np.ndarray
    half_width: float = SCALE_HALF_WIDTH

    @classmethod
    def fit(cls, values, half_width: float = SCALE_HALF_WIDTH) -> "AffineScaling":
        values = np.asarray(values, dtype=float)
        lo, hi = values.min(axis=0), values.max(axis=0)
        # constant columns get a unit-width window so the map stays invertible
        flat = hi - lo <= 0
        lo = np.where(flat, lo - 0.5, lo)
        hi = np.where(flat, hi + 0.5, hi)
        return cls(lo, hi, half_width)

    def forward(self, x):
        return self.half_width * (2.0 * (np.asarray(x) - self.lo) / (self.hi - self.lo) - 1.0)

    def inverse(self, s):
        return self.lo + (np.asarray(s) / self.half_width + 1.0) * 0.5 * (self.hi - self.lo)

    def to_dict(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "half_width": self.half_width}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["lo"], dtype=float), np.array(d["hi"], dtype=float), float(d["half_width"]))


@dataclass(frozen=True)
class KoopmanModel:
    K: np.ndarray
    input_scaling: AffineScaling
    output_scaling: AffineScaling
    svd_threshold: float
    rank: int
    dictionary: Dictionary = DICTIONARY
    readout_indices: tuple[int, int, int] = LINEAR_INDICES
    train_time_s: float = field(default=0.0, compare=False)

    kind = "koopman"

    def lifted_prediction(self, theta) -> np.ndarray:
        return lift(self.input_scaling.forward(theta), self.dictionary) @ self.K

    def predict(self, theta) -> np.ndarray:
        """``(beta, gamma, z_p)`` for motor angles of shape (3,) or (N, 3)."""
        psi = self.lifted_prediction(theta)
        return self.output_scaling.inverse(psi[..., list(self.readout_indices)])

    def readout_matrix(self) -> np.ndarray:
        """Selector B with ``Psi(y) @ B`` equal to the scaled ``y``."""
        B = np.zeros((self.dictionary.dim, len(self.readout_indices)))
        for col, idx in enumerate(self.readout_indices):
            B[idx, col] = 1.0
        return B

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "ordering": ORDERING_TAG,
            "storage": "row-major",
            "K": self.K.tolist(),
            "input_scaling": self.input_scaling.to_dict(),
            "output_scaling": self.output_scaling.to_dict(),
            "readout_indices": list(self.readout_indices),
            "svd_threshold": self.svd_threshold,
            "rank": self.rank,
            "train_time_s": self.train_time_s,
        }

    @classmethod
    def from_json(cls, d: dict) -> "KoopmanModel":
        if d.get("kind") != cls.kind or d.get("ordering") != ORDERING_TAG:
            raise ValueError("not a Koopman model file for this dictionary")
        K = np.array(d["K"], dtype=float)
        if K.shape != (LIFTED_DIM, LIFTED_DIM) or not np.all(np.isfinite(K)):
            raise ValueError("K must be a finite 125x125 matrix")
        return cls(
            K=K,
            input_scaling=AffineScaling.from_dict(d["input_scaling"]),
            output_scaling=AffineScaling.from_dict(d["output_scaling"]),
            svd_threshold=float(d["svd_threshold"]),
            rank=int(d["rank"]),
            readout_indices=tuple(d["readout_indices"]),
            train_time_s=float(d.get("train_time_s", 0.0)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "KoopmanModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def _accumulate_qr(psi_x_chunks):
    """R factor of Psi_x and Q^T Psi_y from (Psi_x, Psi_y) chunks."""
    R = C = None
    for px, py in psi_x_chunks:
        block = np.hstack([px, py])
        if R is not None:
            block = np.vstack([np.hstack([R, C]), block])
        r = np.linalg.qr(block, mode="r")
        n = px.shape[1]
        R, C = r[:n, :n], r[:n, n:]
        if R.shape[0] < n:
            # fewer rows than features so far: pad to square
            pad = n - R.shape[0]
            R = np.vstack([R, np.zeros((pad, n))])
            C = np.vstack([C, np.zeros((pad, C.shape[1]))])
    return R, C


def _lifted_chunks(xs, ys, chunk_size):
    for start in range(0, len(xs), chunk_size):
        yield lift(xs[start : start + chunk_size]), lift(ys[start : start + chunk_size])


def fit(train, svd_threshold: float = 1e-10, chunk_size: int = 20000) -> KoopmanModel:
    """Fit the Koopman matrix on a :class:`~rrur.data.Dataset`."""
    t0 = time.perf_counter()
    in_scale = AffineScaling.fit(train.theta)
    out_scale = AffineScaling.fit(train.target)
    xs, ys = in_scale.forward(train.theta), out_scale.forward(train.target)
    R, C = _accumulate_qr(_lifted_chunks(xs, ys, chunk_size))
    U, s, Vt = np.linalg.svd(R)
    # singular values of G are s**2 / M
    if s[0] == 0:
        raise DegenerateData("lifted inputs are all zero")
    keep = s**2 > svd_threshold * s[0] ** 2
    rank = int(keep.sum())
    if rank == 0:
        raise DegenerateData("G has numerical rank 0")
    K = (Vt[keep].T / s[keep]) @ (U[:, keep].T @ C)
    return KoopmanModel(
        K=K,
        input_scaling=in_scale,
        output_scaling=out_scale,
        svd_threshold=svd_threshold,
        rank=rank,
        train_time_s=time.perf_counter() - t0,
    )


def gram_matrices(model: KoopmanModel, dataset):
    """Explicit ``(G, A)`` for a dataset under the model's scaling (reference use)."""
    px = lift(model.input_scaling.forward(dataset.theta))
    py = lift(model.output_scaling.forward(dataset.target))
    M = len(px)
    return px.T @ px / M, px.T @ py / M


def objective(model: KoopmanModel, dataset, K=None) -> float:
    """Least-squares residual ``J = 1/2 sum_j ||Psi(y_j) - Psi(x_j) K||^2``."""
    K = model.K if K is None else K
    px = lift(model.input_scaling.forward(dataset.theta))
    py = lift(model.output_scaling.forward(dataset.target))
    return 0.5 * float(np.sum((py - px @ K) ** 2))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of K (column eigenvectors) with left eigenvectors and modes.

    ``left`` holds the rows ``w_n^*`` normalised so that ``left @ right = I``;
    ``modes[n] = (w_n^* B)^T`` are the Koopman modes for the readout.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    modes: np.ndarray
    model: KoopmanModel

    def eigenfunctions(self, theta) -> np.ndarray:
        return lift(self.model.input_scaling.forward(theta)) @ self.right

    def reconstruct(self, theta) -> np.ndarray:
        """Pose from the expansion ``sum_n lambda_n phi_n(x) v_n``."""
        phi = self.eigenfunctions(theta)
        scaled = (phi * self.eigenvalues) @ self.modes
        if np.max(np.abs(scaled.imag)) > 1e-6 * max(1.0, np.max(np.abs(scaled.real))):
            raise EigenFailure("mode expansion is not real")
        return self.model.output_scaling.inverse(scaled.real)

    def eigen_residuals(self) -> np.ndarray:
        K = self.model.K
        return np.linalg.norm(K @ self.right - self.right * self.eigenvalues, axis=0)


def spectral_decompose(model: KoopmanModel) -> SpectralDecomposition:
    try:
        lam, right = np.linalg.eig(model.K)
        left = np.linalg.inv(right)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(left))):
        raise EigenFailure("non-finite eigen decomposition")
    modes = left @ model.readout_matrix()
    return SpectralDecomposition(lam, right, left, modes, model)
