"""Command-line entry point.

Angles are given and printed in degrees, lengths in millimetres. Exit codes:
0 on success, 1 on domain errors (a single ``error=<Name> key=value`` line on
stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import koopman, rnn
from .errors import KinematicsError
from .evaluate import compare, evaluate, format_metrics, write_predictions
from .fk import FkProblem, fk_solve
from .geometry import load_params
from .ik import solve_ik


def _triple(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return tuple(float(p) for p in parts)


def _range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected min:max:step")
    return tuple(float(p) for p in parts)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def cmd_ik(args, params) -> int:
    sol = solve_ik(params, args.z, np.radians(args.beta), np.radians(args.gamma))
    res = sol.residuals(params)
    for k, chain in enumerate(sol.chains):
        print(
            f"chain={chain.chain_index} theta_deg={_fmt(np.degrees(chain.theta))} "
            f"phi_deg={_fmt(np.degrees(chain.phi))} f1={res[2 * k]:.3e} f2={res[2 * k + 1]:.3e} "
            f"branch={chain.branch_tag}"
        )
    p = sol.pose
    print(f"pose zp_mm={_fmt(p.z_p)} xp_mm={_fmt(p.x_p)} yp_mm={_fmt(p.y_p)}")
    return 0


def cmd_fk(args, params) -> int:
    theta = tuple(np.radians(args.theta))
    guess = None
    if args.guess:
        g = [float(v) for v in args.guess.split(",")]
        if len(g) != 6:
            raise ValueError("--guess needs phi1,phi2,phi3 (deg), z_p (mm), beta, gamma (deg)")
        guess = tuple(np.radians(g[:3])) + (g[3], np.radians(g[4]), np.radians(g[5]))
    sol = fk_solve(FkProblem(params, theta, guess))
    p = sol.pose
    print(
        f"zp_mm={_fmt(p.z_p)} beta_deg={_fmt(np.degrees(p.beta))} gamma_deg={_fmt(np.degrees(p.gamma))} "
        f"xp_mm={_fmt(p.x_p)} yp_mm={_fmt(p.y_p)} residual_norm={sol.residual_norm:.3e} "
        f"iterations={sol.iterations} branch_valid={int(sol.branch_valid)}"
    )
    print("phi_deg=" + ",".join(_fmt(v) for v in np.degrees(sol.phi)))
    return 0


def cmd_gen_data(args, params) -> int:
    if args.mode == "grid":
        to_rad = lambda r: (np.radians(r[0]), np.radians(r[1]), np.radians(r[2]))
        ds = data_mod.generate_grid(params, args.z, to_rad(args.beta), to_rad(args.gamma))
    elif args.mode == "traj":
        spec = data_mod.TrajectorySpec(
            amp_beta=np.radians(args.amp_beta),
            amp_gamma=np.radians(args.amp_gamma),
            amp_z=args.amp_z,
            z0=args.z0,
            period=args.period,
            length=args.len,
        )
        ds = data_mod.generate_trajectory(params, spec)
    else:
        ds = data_mod.generate_uniform(params, args.n, args.seed)
    data_mod.save_csv(ds, args.output)
    print(f"samples={len(ds)} skipped={ds.grid_spec.get('n_skipped', 0)} file={args.output}")
    return 0


def cmd_train(args, params) -> int:
    train_set = data_mod.load_csv(args.data)
    if args.model == "koopman":
        model = koopman.fit(train_set, args.svd_tol)
        extra = f"rank={model.rank}"
    else:
        val_set = data_mod.load_csv(args.val) if args.val else train_set
        config = rnn.RnnConfig(
            hidden_size=args.hidden,
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.lr,
            seed=args.seed,
        )
        model, trace = rnn.train(config, train_set, val_set)
        extra = f"final_train_loss={trace['train'][-1]:.6g} final_val_loss={trace['val'][-1]:.6g}"
    model.save(args.output)
    print(f"model={model.kind} train_time_s={model.train_time_s:.3f} {extra} file={args.output}")
    return 0


def load_model(path):
    blob = json.loads(Path(path).read_text())
    kind = blob.get("kind")
    if kind == "koopman":
        return koopman.KoopmanModel.from_json(blob)
    if kind == "rnn":
        return rnn.RnnModel.from_json(blob)
    raise ValueError(f"unknown model kind {kind!r} in {path}")


def cmd_predict(args, params) -> int:
    model = load_model(args.model)
    ds = data_mod.load_csv(args.data)
    write_predictions(params, args.output, model.predict(ds.theta), ds.target)
    print(f"samples={len(ds)} file={args.output}")
    return 0


def cmd_eval(args, params) -> int:
    model = load_model(args.model)
    test = data_mod.load_csv(args.test)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    metrics, pred = evaluate(params, model, test)
    write_predictions(params, out / "pred.csv", pred, test.target)
    line = format_metrics(model.kind, metrics)
    (out / "report.txt").write_text(line + "\n")
    print(line)
    return 0


def cmd_compare(args, params) -> int:
    models = {"koopman": load_model(args.koopman), "rnn": load_model(args.rnn)}
    _, text = compare(params, models, data_mod.load_csv(args.test), args.output)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rrur",
        description="3-RRUR neck-brace kinematics: IK, FK oracle, datasets, Koopman and RNN estimators. "
        "Angles on the command line are in degrees, lengths in mm.",
    )
    ap.add_argument("--params", help="robot parameter JSON (default: bundled prototype)")
    ap.add_argument("--seed", type=int, default=7, help="seed for sampling and training (default 7)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("ik", help="inverse kinematics of one pose")
    p.add_argument("--z", type=float, required=True, help="z_p in mm")
    p.add_argument("--beta", type=float, required=True, help="flexion/extension in deg")
    p.add_argument("--gamma", type=float, required=True, help="lateral bending in deg")
    p.set_defaults(func=cmd_ik)

    p = sub.add_parser("fk", help="forward kinematics by Newton iteration")
    p.add_argument("--theta", type=_triple, required=True, help="theta1,theta2,theta3 in deg")
    p.add_argument("--guess", help="phi1,phi2,phi3 (deg),z_p (mm),beta,gamma (deg)")
    p.set_defaults(func=cmd_fk)

    p = sub.add_parser("gen-data", help="generate a dataset CSV from IK")
    modes = p.add_subparsers(dest="mode", required=True)
    g = modes.add_parser("grid")
    g.add_argument("--z", type=_range, required=True, help="min:max:step in mm")
    g.add_argument("--beta", type=_range, required=True, help="min:max:step in deg")
    g.add_argument("--gamma", type=_range, required=True, help="min:max:step in deg")
    g.add_argument("-o", "--output", required=True)
    t = modes.add_parser("traj")
    t.add_argument("--amp-beta", type=float, required=True, help="deg")
    t.add_argument("--amp-gamma", type=float, required=True, help="deg")
    t.add_argument("--amp-z", type=float, required=True, help="mm")
    t.add_argument("--z0", type=float, required=True, help="mm")
    t.add_argument("--period", type=float, required=True, help="steps")
    t.add_argument("--len", type=int, required=True, help="steps")
    t.add_argument("-o", "--output", required=True)
    u = modes.add_parser("uniform", help="seeded uniform draws from the sampling box")
    u.add_argument("--n", type=int, required=True)
    u.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="fit an estimator")
    models = p.add_subparsers(dest="model", required=True)
    k = models.add_parser("koopman")
    k.add_argument("--data", required=True)
    k.add_argument("--svd-tol", type=float, default=1e-10)
    k.add_argument("-o", "--output", required=True)
    r = models.add_parser("rnn")
    r.add_argument("--data", required=True)
    r.add_argument("--val")
    r.add_argument("--epochs", type=int, default=50)
    r.add_argument("--hidden", type=int, default=64)
    r.add_argument("--batch-size", type=int, default=64)
    r.add_argument("--lr", type=float, default=1e-3)
    r.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    r.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict poses for a dataset CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="metrics of one model on a test CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="Koopman vs RNN report on a test CSV")
    p.add_argument("--koopman", required=True)
    p.add_argument("--rnn", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_compare)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(message)s")
    try:
        params = load_params(args.params)
        return args.func(args, params)
    except KinematicsError as exc:
        print(exc.describe(), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error=Usage message={exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
