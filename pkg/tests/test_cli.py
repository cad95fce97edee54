import json

import numpy as np
import pytest

from rrur.cli import run


def _run(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_ik_neutral(capsys):
    code, out, _ = _run(capsys, "ik", "--z", "150", "--beta", "0", "--gamma", "0")
    assert code == 0
    thetas = [line.split()[1] for line in out.splitlines() if line.startswith("chain=")]
    assert len(thetas) == 3 and len(set(thetas)) == 1


def test_ik_unreachable(capsys):
    code, _, err = _run(capsys, "ik", "--z", "10000", "--beta", "0", "--gamma", "0")
    assert code == 1
    assert err.strip() == "error=WorkspaceViolation chain=1"


def test_no_subcommand(capsys):
    code, _, err = _run(capsys)
    assert code == 2
    assert "usage" in err


def test_bad_argument(capsys):
    code, _, _ = _run(capsys, "fk", "--theta", "1,2")
    assert code == 2


def test_fk(capsys):
    code, out, _ = _run(capsys, "fk", "--theta", "140,140,140")
    assert code == 0
    fields = dict(kv.split("=") for kv in out.split())
    assert float(fields["beta_deg"]) == pytest.approx(0.0, abs=1e-9)
    assert fields["branch_valid"] == "1"


def test_missing_params_file(capsys, tmp_path):
    code, _, _ = _run(capsys, "--params", str(tmp_path / "nope.json"), "ik", "--z", "190", "--beta", "0", "--gamma", "0")
    assert code == 2


def _pipeline(capsys, d):
    assert _run(capsys, "gen-data", "grid", "--z", "188:206:3", "--beta=-5:7:2", "--gamma=-8:8:2", "-o", str(d / "train.csv"))[0] == 0
    assert _run(capsys, "gen-data", "uniform", "--n", "50", "-o", str(d / "val.csv"))[0] == 0
    z0 = 199.0
    assert _run(capsys, "gen-data", "traj", "--amp-beta", "4", "--amp-gamma", "6", "--amp-z", "5", "--z0", str(z0), "--period", "20", "--len", "40", "-o", str(d / "test.csv"))[0] == 0
    assert _run(capsys, "train", "koopman", "--data", str(d / "train.csv"), "-o", str(d / "k.json"))[0] == 0
    assert _run(capsys, "train", "rnn", "--data", str(d / "train.csv"), "--val", str(d / "val.csv"), "--epochs", "2", "--hidden", "8", "-o", str(d / "r.json"))[0] == 0
    assert _run(capsys, "predict", "--model", str(d / "k.json"), "--data", str(d / "test.csv"), "-o", str(d / "pred.csv"))[0] == 0
    assert _run(capsys, "eval", "--model", str(d / "k.json"), "--test", str(d / "test.csv"), "-o", str(d / "eval"))[0] == 0
    code, out, _ = _run(capsys, "compare", "--koopman", str(d / "k.json"), "--rnn", str(d / "r.json"), "--test", str(d / "test.csv"), "-o", str(d / "cmp"))
    assert code == 0
    return out


def test_pipeline(capsys, tmp_path):
    out = _pipeline(capsys, tmp_path)
    assert "model=koopman" in out and "model=rnn" in out
    assert (tmp_path / "eval" / "pred.csv").exists()
    assert json.loads((tmp_path / "k.json").read_text())["kind"] == "koopman"
    lines = (tmp_path / "test.csv").read_text().splitlines()
    assert len(lines) == 41


def test_fixed_seed_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    _pipeline(capsys, a)
    _pipeline(capsys, b)
    for name in ("train.csv", "val.csv", "test.csv", "pred.csv", "eval/pred.csv", "cmp/pred_koopman.csv", "cmp/pred_rnn.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    for name in ("k.json", "r.json"):
        # everything but the wall-clock training time must match
        ma, mb = (json.loads((d / name).read_text()) for d in (a, b))
        ma.pop("train_time_s")
        mb.pop("train_time_s")
        assert ma == mb, name
