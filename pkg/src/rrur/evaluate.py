"""Accuracy metrics and the Koopman-vs-RNN comparison report.

Orientation errors are reported in degrees and position errors in millimetres.
Position includes the derived x_p and y_p, reconstructed from the predicted
angles, so a model is charged for angle errors twice: once in orientation
and once through the translation they imply.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import LengthMismatch, ZeroVariance
from .fk import fk_trajectory
from .geometry import RobotParams, x_translation, y_translation

PRED_HEADER = (
    "step,beta_true_deg,gamma_true_deg,zp_true_mm,xp_true_mm,yp_true_mm,"
    "beta_pred_deg,gamma_pred_deg,zp_pred_mm,xp_pred_mm,yp_pred_mm"
)


@dataclass(frozen=True)
class Metrics:
    mse_position: float  # mm^2
    mse_orientation: float  # deg^2
    r2: float
    train_time_s: float
    n_samples: int
    predict_time_s: float = 0.0


def positions(params: RobotParams, poses) -> np.ndarray:
    """(x_p, y_p, z_p) for an (N, 3) array of ``(beta, gamma, z_p)``."""
    poses = np.asarray(poses, dtype=float)
    b, g, z = poses[:, 0], poses[:, 1], poses[:, 2]
    return np.stack([x_translation(params, b, g), y_translation(params, b), z], axis=1)


def _check_lengths(a, b):
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} predictions vs {len(b)} targets")


def position_error_series(params: RobotParams, pred_poses, true_poses) -> np.ndarray:
    _check_lengths(pred_poses, true_poses)
    return positions(params, pred_poses) - positions(params, true_poses)


def orientation_error_series(pred_poses, true_poses) -> np.ndarray:
    """(beta, gamma) errors in degrees."""
    _check_lengths(pred_poses, true_poses)
    return np.degrees(np.asarray(pred_poses)[:, :2] - np.asarray(true_poses)[:, :2])


def mse(errors) -> float:
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("no errors to average")
    return float(np.mean(errors**2))


def r2(pred, true) -> float:
    """Coefficient of determination over the flattened outputs, per-column means."""
    pred, true = np.asarray(pred, dtype=float), np.asarray(true, dtype=float)
    _check_lengths(pred, true)
    if true.size == 0:
        raise ValueError("empty input")
    true2 = true.reshape(len(true), -1)
    ss_tot = float(np.sum((true2 - true2.mean(axis=0)) ** 2))
    if ss_tot == 0:
        raise ZeroVariance("all targets identical")
    ss_res = float(np.sum((pred.reshape(true2.shape) - true2) ** 2))
    return 1.0 - ss_res / ss_tot


def report_units(poses) -> np.ndarray:
    """``(beta, gamma, z_p)`` converted to (deg, deg, mm)."""
    poses = np.asarray(poses, dtype=float)
    return np.column_stack([np.degrees(poses[:, 0]), np.degrees(poses[:, 1]), poses[:, 2]])


class FkOracleModel:
    """The Newton FK solver behind the ``predict`` interface (exact reference)."""

    kind = "fk-oracle"
    train_time_s = 0.0

    def __init__(self, params: RobotParams):
        self.params = params

    def predict(self, theta) -> np.ndarray:
        sols = fk_trajectory(self.params, np.asarray(theta).reshape(-1, 3))
        return np.array([[s.pose.beta, s.pose.gamma, s.pose.z_p] for s in sols])


def evaluate(params: RobotParams, model, test) -> tuple[Metrics, np.ndarray]:
    """Metrics of ``model`` on a dataset; also returns its predictions (N, 3)."""
    t0 = time.perf_counter()
    pred = np.asarray(model.predict(test.theta)).reshape(-1, 3)
    elapsed = time.perf_counter() - t0
    metrics = Metrics(
        mse_position=mse(position_error_series(params, pred, test.target)),
        mse_orientation=mse(orientation_error_series(pred, test.target)),
        r2=r2(report_units(pred), report_units(test.target)),
        train_time_s=float(getattr(model, "train_time_s", 0.0)),
        n_samples=len(test),
        predict_time_s=elapsed,
    )
    return metrics, pred


def write_predictions(params: RobotParams, path, pred, true) -> None:
    """Per-step true and predicted pose, angles in degrees, lengths in mm."""
    pt, pp = positions(params, true), positions(params, pred)
    tu, pu = report_units(true), report_units(pred)
    rows = np.column_stack([np.arange(len(true)), tu, pt[:, :2], pu, pp[:, :2]])
    with open(path, "w", newline="\n") as fh:
        fh.write(PRED_HEADER + "\n")
        for row in rows:
            fh.write(str(int(row[0])) + "," + ",".join(f"{v:.17g}" for v in row[1:]) + "\n")


def format_metrics(name: str, m: Metrics) -> str:
    return (
        f"model={name} n={m.n_samples} mse_position_mm2={m.mse_position:.6g} "
        f"mse_orientation_deg2={m.mse_orientation:.6g} r2={m.r2:.6f} train_time_s={m.train_time_s:.3f}"
    )


def compare(params: RobotParams, models: dict, test, out_dir) -> tuple[dict, str]:
    """Evaluate every model on the same test set and write the report files.

    Returns ``(metrics_by_name, report_text)``; writes ``report.txt`` and one
    ``pred_<name>.csv`` per model into ``out_dir``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = {}
    lines = [
        "# position MSE averages x_p, y_p, z_p jointly (mm^2); x_p, y_p derived from predicted angles",
        "# orientation MSE averages beta, gamma (deg^2); R^2 over flattened (beta deg, gamma deg, z_p mm)",
    ]
    for name, model in models.items():
        metrics, pred = evaluate(params, model, test)
        results[name] = metrics
        write_predictions(params, out_dir / f"pred_{name}.csv", pred, test.target)
        lines.append(format_metrics(name, metrics))
    names = list(models)
    if len(names) == 2:
        a, b = (results[n] for n in names)
        lines.append(
            f"ratio {names[1]}/{names[0]} "
            f"train_time={_ratio(b.train_time_s, a.train_time_s)} "
            f"mse_position={_ratio(b.mse_position, a.mse_position)} "
            f"mse_orientation={_ratio(b.mse_orientation, a.mse_orientation)}"
        )
    text = "\n".join(lines) + "\n"
    (out_dir / "report.txt").write_text(text)
    return results, text


def _ratio(num: float, den: float) -> str:
    return f"{num / den:.6g}" if den > 0 else "inf"


def metrics_dict(m: Metrics) -> dict:
    return asdict(m)
