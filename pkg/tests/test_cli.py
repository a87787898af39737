import json
import os

import pytest

from tensorscape.cli import main, parse_ladder, UsageError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_parse_ladder():
    assert parse_ladder("3..6") == [3, 4, 5, 6]
    assert parse_ladder("3,5,9") == [3, 5, 9]
    with pytest.raises(UsageError):
        parse_ladder("5..3")
    with pytest.raises(UsageError):
        parse_ladder("3,3")
    with pytest.raises(UsageError):
        parse_ladder("abc")


def test_verify_exact_families(capsys):
    code, out = run(capsys, "verify", "C0", "C1", "C4", "C5", "CI", "--d", "3..6")
    assert code == 0
    payload = json.loads(out)
    assert payload["schema_version"] == 1
    assert payload["passed"] is True
    assert payload["families"]["C4"]["loss_verdict"] == "ExactMatch"


def test_verify_asymptotic_family(capsys):
    code, out = run(capsys, "verify", "C3", "--d", "8,16,32")
    assert code == 0
    assert json.loads(out)["families"]["C3"]["loss_verdict"] == "AsymptoticConsistent"


def test_verify_unknown_family_usage_error(capsys):
    code = main(["verify", "BogusName", "--d", "3..4"])
    assert code == 2


def test_bad_ladder_usage_error():
    assert main(["verify", "C0", "--d", "9..3"]) == 2


def test_spectrum_command(capsys, tmp_path):
    out_path = str(tmp_path / "spec.json")
    code, out = run(capsys, "spectrum", "C4", "C5", "--d", "3..5", "--out", out_path)
    assert code == 0
    payload = json.loads(out)
    assert payload["families"]["C4"]["verdict"] == "ExactMatch"
    assert payload["families"]["C5"]["verdict"] == "ExactMatch"
    assert any(r["family"] == "C4" for r in payload["index_value"])
    assert os.path.exists(str(tmp_path / "spec.csv"))
    header = open(str(tmp_path / "spec.csv")).readline()
    assert header.startswith("family,d,value,multiplicity")


def test_spectrum_command_gauss_identity(capsys):
    code, out = run(capsys, "spectrum", "DI", "--d", "8,16")
    assert code == 0
    assert json.loads(out)["families"]["DI"]["verdict"] == "ExactMatch"


def test_puiseux_command(capsys):
    code, out = run(capsys, "puiseux", "--pattern", "DiagSd", "--kernel", "frobenius")
    assert code == 0
    payload = json.loads(out)
    cands = payload["candidates"]["(none)"]
    assert {tuple(sorted(c.items())) for c in cands} == {
        (("x1", "-1"), ("x2", "-1")), (("x1", "0"), ("x2", "-3/4"))}
    names = {b["name"] for b in payload["branches"]}
    assert {"C1", "C2"} <= names
    # the emitted system text parses back to the exact polynomials
    from tensorscape.core import Kernel
    from tensorscape.symbolic import (parse_poly, pattern_variables,
                                      symbolic_restricted_gradient)
    system = symbolic_restricted_gradient(Kernel.frobenius(), "DiagSd")
    v = pattern_variables("DiagSd")
    assert [parse_poly(s, v) for s in payload["system"]] == list(system)


def test_puiseux_gauss_candidates(capsys):
    code, out = run(capsys, "puiseux", "--pattern", "DiagSd", "--kernel", "gauss")
    assert code == 0
    payload = json.loads(out)
    cands = payload["candidates"]["(none)"]
    assert len(cands) == 3
    d1 = next(b for b in payload["branches"] if b["name"] == "D1")
    assert d1["series"]["x1"]["terms"][0]["coef"] == "(3/5)^(1/3)"


def test_radial_command(capsys):
    code, out = run(capsys, "radial", "C5", "CI", "--d", "4", "--seed", "5")
    assert code == 0
    payload = json.loads(out)
    assert payload["families"]["C5"]["verdict"] == "SaddleCertified"
    assert payload["families"]["CI"]["verdict"] == "NotASaddle"
    assert all(payload["connections"].values())


def test_sphere_min_command(capsys):
    code, out = run(capsys, "sphere-min", "C5", "--d", "4", "--r", "0.1",
                    "--pattern", "DiagSd1", "--seed", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["sphere_value"] == pytest.approx(0.998001, abs=1e-6)
    assert payload["deficit"] == pytest.approx(2e-3, rel=0.05)


def test_determinism_byte_identical(capsys):
    _, out1 = run(capsys, "radial", "C5", "--d", "4", "--seed", "7")
    _, out2 = run(capsys, "radial", "C5", "--d", "4", "--seed", "7")
    assert out1 == out2
    _, out3 = run(capsys, "sphere-min", "C0", "--d", "3", "--r", "0.05", "--seed", "9")
    _, out4 = run(capsys, "sphere-min", "C0", "--d", "3", "--r", "0.05", "--seed", "9")
    assert out3 == out4


def test_config_file_defaults(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("d = 3..4\nseed = 11\n")
    code, out = run(capsys, "verify", "C0", "--config", str(cfg))
    assert code == 0
    payload = json.loads(out)
    assert payload["seed"] == 11
    assert [r["d"] for r in payload["families"]["C0"]["rows"]] == [3, 4]
    # flags win over the config file
    code, out = run(capsys, "verify", "C0", "--config", str(cfg), "--seed", "3")
    assert json.loads(out)["seed"] == 3


def test_report_renders_files(capsys, tmp_path):
    outdir = str(tmp_path / "rpt")
    code, out = run(capsys, "report", "--d", "3..5", "--out", outdir, "--seed", "2")
    assert code == 0
    for fname in ("report.json", "spectra.csv", "spectra.png",
                  "loss_vs_index.png", "radial_deficit.png"):
        path = os.path.join(outdir, fname)
        assert os.path.exists(path) and os.path.getsize(path) > 0, fname
    payload = json.loads(open(os.path.join(outdir, "report.json")).read())
    assert payload["passed"] is True
