import json

import pytest

from helpers import box_grid
from nsreg import __version__
from nsreg.cli import main
from nsreg.grid import FieldSpec
from nsreg.reports import config_hash


def _report(path):
    return json.loads(path.read_text())


@pytest.fixture
def fields(tmp_path, monkeypatch):
    """A small blow-up field and its pressure companion, written via `gen`."""
    monkeypatch.chdir(tmp_path)
    spec = FieldSpec(kind="blowup-profile", grid=box_grid(32, 0.02, 9), t_blow=0.0205,
                     width=0.25)
    (tmp_path / "spec.json").write_text(json.dumps(spec.to_dict()))
    code = main(["gen", "--spec", "spec.json", "--out", "v.nsfd", "--pressure-out", "p.nsfd",
                 "--no-figure"])
    assert code == 0
    return tmp_path


def test_gen_outputs(fields):
    assert (fields / "v.nsfd").exists() and (fields / "p.nsfd").exists()
    side = _report(fields / "v.json")
    assert side["header"]["command"] == "gen"
    assert side["result"]["pressure_label"] == "non-NS |v|^2 companion"


def test_gen_figure(fields):
    assert main(["gen", "--spec", "spec.json", "--out", "w.nsfd"]) == 0
    assert (fields / "w.png").stat().st_size > 0


def test_theta(tmp_path):
    out = tmp_path / "t.json"
    assert main(["theta", "--p", "2.093023255813954", "--r", "3", "--delta", "0.3",
                 "--gamma", "0.1", "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["result"]["case"] == "I.3"
    assert rep["result"]["theta"] == pytest.approx(0.7986, abs=1e-4)
    head = rep["header"]
    assert head["version"] == __version__
    assert head["config_sha256"] == config_hash(head["config"])


def test_region_csv(tmp_path):
    out = tmp_path / "region.csv"
    assert main(["region", "--n", "10", "--delta-samples", "3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# tool: nsreg")
    body = [ln for ln in lines if not ln.startswith("#")]
    assert body[0].split(",")[:2] == ["inv_p", "inv_r"]
    assert len(body) == 1 + 100


def test_lorentz_pieces(tmp_path):
    src = tmp_path / "f.json"
    src.write_text(json.dumps({"pieces": [[1.0, 1.0]]}))
    out = tmp_path / "l.json"
    assert main(["lorentz", "--input", str(src), "--p", "2", "--q", "2", "--out",
                 str(out)]) == 0
    assert _report(out)["result"]["norm"]["value"] == pytest.approx(1.0)


def test_lorentz_field(fields):
    assert main(["lorentz", "--input", "v.nsfd", "--p", "3", "--q", "inf", "--out",
                 "l.json"]) == 0
    assert _report(fields / "l.json")["result"]["norm"]["value"] > 0


def test_diagnose(fields):
    assert main(["diagnose", "--field", "v.nsfd", "--pressure", "p.nsfd", "--center",
                 "0,0,0,0.02", "--radii", "0.125,0.0625", "--q", "2.6", "--out", "d.json"]) == 0
    rows = _report(fields / "d.json")["result"]["rows"]
    assert len(rows) == 2
    assert all(row["D"] is not None for row in rows)


def test_scan_then_cover(fields):
    assert main(["scan", "--field", "v.nsfd", "--radii", "geometric:0.125,0.5,4",
                 "--out", "s.json"]) == 0
    scan = _report(fields / "s.json")["result"]
    assert [0.0, 0.0, 0.0] in [p["point"] for p in scan["points"]]
    # the coarse grid cannot resolve witnesses below eps_hat/5, so this run reports the gap
    code = main(["cover", "--sigma", "s.json", "--field", "v.nsfd", "--delta", "0.2",
                 "--eps-q", "0.05", "--eps-hat", "0.125", "--out", "c.json"])
    assert code == 1


def test_energy(fields):
    (fields / "tuple.json").write_text(json.dumps({"p": 2.093023255813954, "r": 3,
                                                   "delta": 0.3, "gamma": 0.1}))
    assert main(["energy", "--field", "v.nsfd", "--pressure", "p.nsfd", "--delta", "0.3",
                 "--window", "0,0.02", "--tuple", "tuple.json", "--out", "e.json"]) == 0
    res = _report(fields / "e.json")["result"]
    assert res["ledger"]["E_delta"] > 0
    assert res["pressure_term"]["passed"]


def test_harness(tmp_path):
    out = tmp_path / "h.json"
    assert main(["harness", "--n", "3", "--grid-n", "12", "--nt", "4", "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["header"]["seed"] == 0
    assert rep["result"]["all_finite"]


# exit codes and configuration -----------------------------------------------------------------

def test_unknown_flag_exit_2(capsys):
    assert main(["theta", "--bogus", "1"]) == 2


def test_missing_required_flag(capsys):
    assert main(["theta", "--p", "2"]) == 2
    assert "--r" in capsys.readouterr().err


def test_missing_input_file(tmp_path, capsys):
    assert main(["diagnose", "--field", str(tmp_path / "none.nsfd"), "--center", "0,0,0,0",
                 "--radii", "0.1", "--q", "2.5"]) == 2


def test_inadmissible_tuple_is_not_an_error(tmp_path):
    out = tmp_path / "t.json"
    assert main(["theta", "--p", "1", "--r", "1", "--delta", "0.2", "--out", str(out)]) == 0
    assert _report(out)["result"]["admissible"] is False


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": 2.093023255813954, "r": 3, "delta": 0.3, "gamma": 0.1}))
    out = tmp_path / "a.json"
    assert main(["theta", "--config", str(cfg), "--out", str(out)]) == 0
    assert _report(out)["result"]["delta"] == 0.3
    assert main(["theta", "--config", str(cfg), "--delta", "0.25", "--out", str(out)]) == 0
    assert _report(out)["result"]["delta"] == 0.25
    cfg.write_text(json.dumps({"colour": 1}))
    assert main(["theta", "--config", str(cfg), "--out", str(out)]) == 2


def test_workers_byte_identical(fields):
    outs = []
    for workers in ("1", "2"):
        assert main(["scan", "--field", "v.nsfd", "--radii", "geometric:0.125,0.5,3",
                     "--workers", workers, "--out", "s.json"]) == 0
        outs.append((fields / "s.json").read_bytes())
    assert outs[0] == outs[1]
