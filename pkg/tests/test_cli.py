import subprocess
import sys

import numpy as np
import pytest

from srda import load_checkpoint, load_features
from srda.cli import main


def _gen(tmp_path, *extra):
    return main(["gen", "--out", str(tmp_path / "train.srda"), "--val-out", str(tmp_path / "val.srda"),
                 "--test-out", str(tmp_path / "test.srda"), "--classes", "6", "--dim", "8",
                 "--samples-per-class", "25", "--val-per-class", "20", "--test-per-class", "20", *extra])


def _pipeline(d):
    assert _gen(d) == 0
    assert main(["train", "--train", str(d / "train.srda"), "--eval", str(d / "test.srda"),
                 "--checkpoint", str(d / "model.ckpt"), "--report", str(d / "report.csv"),
                 "--plan-out", str(d / "plan.txt"), "--base-classes", "2", "--increment", "2",
                 "--offline"]) == 0
    assert main(["tune", "--checkpoint", str(d / "model.ckpt"), "--val", str(d / "val.srda"),
                 "--curve", str(d / "curve.csv")]) == 0


def test_smoke_pipeline(tmp_path, capsys):
    _pipeline(tmp_path)
    report = (tmp_path / "report.csv").read_text().splitlines()
    assert report[0] == "stream_offset,classes_seen,top1_accuracy,topk_accuracy,offline_accuracy"
    assert len(report) == 1 + 3
    curve = (tmp_path / "curve.csv").read_text().splitlines()
    assert curve[0] == "alpha,accuracy" and len(curve) == 22
    _, head, meta = load_checkpoint(tmp_path / "model.ckpt")
    assert head.alpha == meta["extra"]["tuned_alpha"]
    out = capsys.readouterr().out
    assert "omega_all=" in out and "best_alpha=" in out


def test_pipeline_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    _pipeline(a)
    _pipeline(b)
    for name in ("train.srda", "val.srda", "test.srda", "model.ckpt", "report.csv", "plan.txt", "curve.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_alpha_out_of_range(tmp_path, capsys):
    _gen(tmp_path)
    code = main(["train", "--train", str(tmp_path / "train.srda"), "--checkpoint", str(tmp_path / "m"),
                 "--alpha", "1.2"])
    assert code == 2
    assert "alpha must lie in [0, 1]" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["train", "--train", str(tmp_path / "nope.srda"), "--checkpoint", str(tmp_path / "m")]) == 1
    err = capsys.readouterr().err
    assert err.startswith("srda: error: no such file") and err.count("\n") == 1


def test_unknown_flag(capsys):
    assert main(["gen", "--out", "x.srda", "--bogus"]) == 2
    assert "unrecognized arguments" in capsys.readouterr().err


def test_invalid_combination(tmp_path, capsys):
    _gen(tmp_path)
    assert main(["train", "--train", str(tmp_path / "train.srda"), "--checkpoint", str(tmp_path / "m"),
                 "--offline"]) == 1
    assert "--offline need --eval" in capsys.readouterr().err
    assert main(["train", "--train", str(tmp_path / "train.srda"), "--checkpoint", str(tmp_path / "m"),
                 "--base-classes", "99"]) == 1
    assert "exceeds" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("# synthetic settings\nclasses = 4\ndim = 3\nsamples_per_class = 7\nseed = 5\n")
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "a.csv")]) == 0
    X, y = load_features(tmp_path / "a.csv")
    assert X.shape == (28, 3)
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "b.csv"), "--dim", "2"]) == 0
    assert load_features(tmp_path / "b.csv")[0].shape == (28, 2)


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    assert "unknown config key: colour" in capsys.readouterr().err


def test_config_boolean_flag(tmp_path):
    _gen(tmp_path)
    cfg = tmp_path / "train.cfg"
    cfg.write_text(f"train = {tmp_path / 'train.srda'}\neval = {tmp_path / 'test.srda'}\n"
                   f"checkpoint = {tmp_path / 'm.ckpt'}\nreport = {tmp_path / 'r.csv'}\noffline = true\n")
    assert main(["train", "--config", str(cfg)]) == 0
    assert (tmp_path / "r.csv").read_text().splitlines()[0].endswith("offline_accuracy")


def test_eval_and_info(tmp_path, capsys):
    _pipeline(tmp_path)
    capsys.readouterr()
    assert main(["eval", "--checkpoint", str(tmp_path / "model.ckpt"), "--eval", str(tmp_path / "test.srda"),
                 "--alpha", "0", "--report", str(tmp_path / "e.csv")]) == 0
    assert "final_top1=" in capsys.readouterr().out
    assert len((tmp_path / "e.csv").read_text().splitlines()) == 2
    assert main(["info", "--checkpoint", str(tmp_path / "model.ckpt")]) == 0
    out = capsys.readouterr().out
    assert "class_id,count,prior" in out and "tuned_alpha=" in out
    assert "\n0,25," in out


def test_info_imagenet_setting(capsys):
    assert main(["info", "--classes", "1000", "--dim", "512"]) == 0
    out = capsys.readouterr().out
    assert "1050624000 bytes (1.051 GB)" in out
    assert "0.001 GB" in out
    assert main(["info"]) == 1


def test_plan_replay(tmp_path):
    _pipeline(tmp_path)
    assert main(["train", "--train", str(tmp_path / "train.srda"), "--checkpoint", str(tmp_path / "replay.ckpt"),
                 "--plan", str(tmp_path / "plan.txt")]) == 0
    a, _, _ = load_checkpoint(tmp_path / "replay.ckpt")
    b, _, _ = load_checkpoint(tmp_path / "model.ckpt")
    assert np.array_equal(a.pooled_cov, b.pooled_cov)


def test_tune_no_update_and_bad_grid(tmp_path, capsys):
    _pipeline(tmp_path)
    before = (tmp_path / "model.ckpt").read_bytes()
    assert main(["tune", "--checkpoint", str(tmp_path / "model.ckpt"), "--val", str(tmp_path / "val.srda"),
                 "--grid", "0,0.5,1", "--metric", "topk", "--top-k", "2", "--no-update"]) == 0
    assert (tmp_path / "model.ckpt").read_bytes() == before
    assert main(["tune", "--checkpoint", str(tmp_path / "model.ckpt"), "--val", str(tmp_path / "val.srda"),
                 "--grid", "0.2,0.5"]) == 1
    assert "invalid grid" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["--version"], ["gen", "--help"]])
def test_module_entry_point(argv):
    r = subprocess.run([sys.executable, "-m", "srda", *argv], capture_output=True, text=True)
    assert r.returncode == 0


def test_tune_curve_has_interior_optimum(tmp_path):
    from oracles import rebuild_curve

    d = tmp_path
    assert main(["gen", "--out", str(d / "train.srda"), "--val-out", str(d / "val.srda"), "--seed", "3"]) == 0
    assert main(["train", "--train", str(d / "train.srda"), "--checkpoint", str(d / "m.ckpt")]) == 0
    assert main(["tune", "--checkpoint", str(d / "m.ckpt"), "--val", str(d / "val.srda"),
                 "--curve", str(d / "curve.csv"), "--no-update"]) == 0
    rows = np.loadtxt(d / "curve.csv", delimiter=",", skiprows=1)
    alphas, accs = rows[:, 0], rows[:, 1]
    assert accs[1:-1].max() > max(accs[0], accs[-1])
    acc, _, _ = load_checkpoint(d / "m.ckpt")
    Xv, yv = load_features(d / "val.srda")
    assert np.max(np.abs(accs - rebuild_curve(acc, Xv, yv, alphas, 1e-4))) <= 1e-9
