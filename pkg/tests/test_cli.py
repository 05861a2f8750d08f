import json
import os

import pytest

from crlab import cli
from crlab.report import canonical, emit_report, to_json_text


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list_covers_every_subcommand(capsys):
    code, out, _ = run(["--list"], capsys)
    assert code == 0
    for name in cli.DEFAULTS:
        assert f"{name:<8} criterion" in out
    for c in map(str, range(1, 9)):
        assert f"criterion {c}:" in out


def test_no_subcommand_is_usage_error(capsys):
    assert run([], capsys)[0] == 2


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as info:
        cli.main(["bogus"])
    assert info.value.code == 2


def test_moments_zbar_fails_with_witness(tmp_path, capsys):
    code, out, _ = run(["moments", "--out", str(tmp_path)], capsys)
    assert code == 1
    assert out.startswith("FAIL [criterion 1/8] moments")
    assert "t=0.4 k=0 |value|=2.51327" in out
    rows = (tmp_path / "moments.csv").read_text().splitlines()
    assert rows[0] == "t,k,re,im,abs"


def test_moments_polynomial_passes(tmp_path, capsys):
    code, out, _ = run(["moments", "--f", "poly:z**2*w+3", "--out", str(tmp_path)], capsys)
    assert code == 0 and out.startswith("PASS")


@pytest.mark.parametrize("f", ["zbar1", "zbar2", "poly:z1**2*w+3", "poly:z1**2*w + z2*w**2 + 3*z1*z2"])
def test_moments_cr_residual(tmp_path, capsys, f):
    code, out, _ = run(["moments", "--surface", "zbar-z", "--f", f, "--out", str(tmp_path)], capsys)
    assert code == 0, out
    assert "cr residual" in out


def test_usage_errors(tmp_path, capsys):
    assert run(["moments", "--surface", "nowhere", "--out", str(tmp_path)], capsys)[0] == 2
    assert run(["approx", "--box", "0.5", "--out", str(tmp_path)], capsys)[0] == 2
    assert run(["bt", "--set", "nokey=1", "--out", str(tmp_path)], capsys)[0] == 2
    assert run(["bt", "--set", "missing-equals", "--out", str(tmp_path)], capsys)[0] == 2


def test_config_file_and_overrides(tmp_path, capsys):
    conf = tmp_path / "m.conf"
    conf.write_text("surface = special-elliptic\nf = poly:z**3\nt_grid = 0.1,0.3\n")
    code, out, _ = run(["moments", "--config", str(conf), "--set", "k_max=2", "--out", str(tmp_path)],
                       capsys)
    assert code == 0
    stored = (tmp_path / "moments_config.txt").read_text()
    assert "k_max = 2" in stored and "t_grid = 0.1,0.3" in stored
    # the stored config re-runs to the same artifacts
    first = (tmp_path / "moments.csv").read_bytes()
    other = tmp_path / "again"
    assert run(["moments", "--config", str(tmp_path / "moments_config.txt"), "--out", str(other)],
               capsys)[0] == 0
    assert (other / "moments.csv").read_bytes() == first


def test_env_out_directory(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CRLAB_OUT", str(tmp_path / "env"))
    assert run(["moments", "--f", "one"], capsys)[0] == 0
    assert (tmp_path / "env" / "moments.csv").exists()


def test_hull_is_deterministic(tmp_path, capsys):
    args = ["hull", "--samples", "20", "--seed-samples", "10", "--seed", "3"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--out", str(a)], capsys)[0] == 0
    assert run(args + ["--out", str(b), "--threads", "3"], capsys)[0] == 0
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    assert "hull_stage1.csv" in names and "hull_stage2.csv" in names
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n
    cloud = json.loads((a / "hull.json").read_text())
    assert max(cloud["residual"]) < 1e-8
    assert all(len(ch) >= 1 for ch, st in zip(cloud["provenance"], cloud["stage"]) if st > 0)


def test_hull_torus_and_quadric(tmp_path, capsys):
    code, out, _ = run(["hull", "--surface", "torus", "--samples", "30", "--out", str(tmp_path)], capsys)
    assert code == 0 and "stage-2 certified 30/30" in out
    code, out, _ = run(["hull", "--surface", "signature-quadric", "--samples", "30", "--out", str(tmp_path)],
                       capsys)
    assert code == 0


def test_sadh_small(tmp_path, capsys):
    code, out, _ = run(["sadh", "--samples", "8", "--t-mesh", "16", "--out", str(tmp_path)], capsys)
    assert code == 0, out
    head = (tmp_path / "sadh_traces.csv").read_text().splitlines()[0]
    assert head == "index,stage,t,norm,residual"


def test_bt_small(tmp_path, capsys):
    code, out, _ = run(["bt", "--f", "one", "--n-grid", "16,64", "--degree", "12", "--beta-max", "12",
                        "--out", str(tmp_path)], capsys)
    assert code in (0, 1)
    assert "[criterion 2]" in out
    assert (tmp_path / "bt_convergence.csv").exists()


def test_approx_elliptic_rejected(tmp_path, capsys):
    code, out, _ = run(["approx", "--surface", "special-elliptic", "--box", "0.5,0.25",
                        "--out", str(tmp_path)], capsys)
    assert code == 1 and "fiber stage rejected" in out


def test_approx_flat_graph_reports_condition_star(tmp_path, capsys):
    code, out, _ = run(["approx", "--surface", "flat-exp", "--box", "1,1", "--out", str(tmp_path)], capsys)
    assert code == 1 and "condition (*) violated" in out


def test_catalog_probe(tmp_path, capsys):
    code, out, _ = run(["catalog", "--out", str(tmp_path)], capsys)
    assert code == 0
    rows = json.loads((tmp_path / "catalog.json").read_text())["surfaces"]
    status = {r["name"]: r["condition_star"] for r in rows}
    assert status["flat-exp"].startswith("violated")
    assert status["hyperbolic-model"] == "ok"


def test_emit_report_is_idempotent(tmp_path):
    art = {"b": [1.5, 2], "a": {"x": "y"}}
    p = emit_report(art, "json", str(tmp_path / "r.json"))
    text = open(p).read()
    assert canonical(text) == text
    q = emit_report(json.loads(text), "json", str(tmp_path / "r2.json"))
    assert open(q).read() == text
    assert to_json_text(art) == text
