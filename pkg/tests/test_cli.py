import csv
import io
import json
import math

import pytest

from rotgauss.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def summary(text):
    (line,) = [ln for ln in text.splitlines() if ln.startswith("# ")]
    return dict(kv.split("=", 1) for kv in line[2:].split())


@pytest.fixture
def pairs(tmp_path):
    p = tmp_path / "pairs.jsonl"
    box = {"x": 0, "y": 0, "w": 4, "h": 2, "theta": 0}
    p.write_text(json.dumps({"pred": box, "target": box}) + "\n")
    return str(p)


@pytest.fixture
def fixture_files(tmp_path):
    a, g = tmp_path / "boundary_anchor.json", tmp_path / "boundary_gt.json"
    a.write_text(json.dumps({"x": 0, "y": 0, "w": 70, "h": 10, "theta": -math.pi / 2, "def": "oc"}))
    g.write_text(json.dumps({"x": 0, "y": 0, "w": 10, "h": 70, "theta": math.radians(-25), "def": "oc"}))
    return str(a), str(g)


def test_distance_identity(capsys, pairs):
    code, out, _ = run(capsys, "distance", "--metric", "kld", "--pairs", pairs)
    assert code == 0
    assert table(out) == [{"pair": "0", "metric": "kld_pt", "value": "0"}]
    assert summary(out) == {"command": "distance", "rows": "1"}


def test_loss_and_iou(capsys, pairs):
    code, out, _ = run(capsys, "loss", "--pairs", pairs, "--metric", "gwd,bcd", "--tau", "1")
    assert code == 0 and [r["loss"] for r in table(out)] == ["0", "0"]
    code, out, _ = run(capsys, "iou", "--pairs", pairs)
    assert code == 0 and table(out)[0]["iou"] == "1"


def test_sweep_scale(capsys):
    code, out, _ = run(capsys, "sweep", "--scenario", "scale", "--metrics", "kld,bcd,gwd")
    assert code == 0
    rows = table(out)
    col = lambda m: [(float(r["grid_value"]), float(r["distance"])) for r in rows if r["metric"].startswith(m)]
    for m in ("kld_pt", "bcd"):
        d = [v for _, v in col(m)]
        assert max(d) - min(d) <= 1e-8
    (s0, d0), *rest = col("gwd")
    for s, d in rest:
        assert d == pytest.approx(d0 * s * s, rel=1e-7)


def test_fit_boundary(capsys, tmp_path, fixture_files):
    a, g = fixture_files
    out_path = tmp_path / "traj.csv"
    code, out, _ = run(capsys, "fit", "--init", a, "--target", g, "--loss", "kld", "--out", str(out_path))
    assert code == 0
    rows = table(out_path.read_text())
    assert float(rows[-1]["skew_iou"]) >= 0.90
    assert list(rows[0]) == ["step", "x", "y", "w", "h", "theta", "loss", "skew_iou"]


def test_convert_degrees(capsys, tmp_path):
    p = tmp_path / "b.json"
    p.write_text(json.dumps({"x": 0, "y": 0, "w": 2, "h": 4, "theta": -45, "def": "oc"}))
    code, out, _ = run(capsys, "convert", "--boxes", str(p), "--degrees", "--to", "le")
    assert code == 0
    r = table(out)[0]
    assert (float(r["w"]), float(r["h"]), float(r["theta"])) == pytest.approx((4, 2, math.pi / 4))


def test_assign(capsys, tmp_path):
    p = tmp_path / "gts.jsonl"
    p.write_text(json.dumps({"x": 60, "y": 60, "w": 30, "h": 12, "theta": 0.4}) + "\n")
    code, out, _ = run(capsys, "assign", "--gts", str(p), "--image-size", "128", "128", "--strides", "8,16")
    assert code == 0
    rows = table(out)
    assert list(rows[0]) == ["anchor", "level", "label", "affinity", "threshold"]
    assert int(summary(out)["positives"]) >= 1


def test_head_fix(capsys, tmp_path):
    p = tmp_path / "cubes.jsonl"
    p.write_text(json.dumps({"x": 0, "y": 0, "z": 0, "w": 4, "h": 2, "l": 1, "theta": 0,
                             "dx": 1, "dy": 0, "class": "pedestrian"}) + "\n")
    code, out, _ = run(capsys, "head-fix", "--input", str(p))
    assert code == 0
    rec = json.loads(out.splitlines()[0])
    assert (rec["w"], rec["h"]) == (2, 4) and rec["theta"] == pytest.approx(math.pi / 2)
    assert rec["class"] == "pedestrian" and rec["dx"] == 1


def test_grad_check(capsys):
    code, out, _ = run(capsys, "grad-check", "--n", "3", "--metric", "kld,gwd")
    assert code == 0 and summary(out)["failures"] == "0"


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "distance", "--pairs", str(tmp_path / "missing.jsonl"))[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["distance", "--nope"])
    assert exc.value.code == 1
    bad = tmp_path / "bad.jsonl"
    box = {"x": 0, "y": 0, "w": 4, "h": 2, "theta": 0}
    bad.write_text(json.dumps({"pred": dict(box, w=0), "target": box}) + "\n")
    assert run(capsys, "distance", "--pairs", str(bad))[0] == 2


def test_selftest_passes_and_is_deterministic(capsys, tmp_path):
    code, out, _ = run(capsys, "selftest", "--out", str(tmp_path / "a"))
    assert code == 0 and summary(out)["failed"] == "0"
    run(capsys, "selftest", "--out", str(tmp_path / "b"))
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
