import json
import math

import pytest

from fractal_steiner import cli


def run(argv):
    return cli.main(argv)


def test_gen_counts(tmp_path, capsys):
    assert run(["gen", "window", "--r", "0.3", "--depth", "3", "--out", str(tmp_path / "w")]) == 0
    assert capsys.readouterr().out.startswith("85 elements")
    assert run(["gen", "sierpinski", "--depth", "6", "--out", str(tmp_path / "s")]) == 0
    assert capsys.readouterr().out.startswith("365 elements")
    data = json.loads((tmp_path / "s" / "scene.json").read_text())
    assert data["seed"] == 0 and len(data["config_hash"]) == 16


def test_analyze_disk(tmp_path):
    out = tmp_path / "disk"
    assert run(["analyze", "disk", "--radius", "0.5", "--h", str(1 / 256), "--out", str(out)]) == 0
    for name in ("tube.csv", "support.csv", "beta.csv", "report.json", "tube.dat", "tube.png", "beta.png"):
        assert (out / name).exists()
    rep = json.loads((out / "report.json").read_text())
    assert rep["estimates"]["D"]["exponent"] == pytest.approx(1.0, abs=0.02)
    assert (out / "tube.csv").read_text().startswith("# fractal_steiner")


def test_poles_sg(tmp_path, capsys):
    assert run(["poles", "sg", "--imcap", "30", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert sum("removable" in ln for ln in lines) == 1
    assert (tmp_path / "poles.csv").exists() and (tmp_path / "poles.png").exists()


def test_reconstruct_sg_beta1(tmp_path, capsys):
    assert run(["reconstruct", "sg", "--i", "1", "--t", "0.1", "--out", str(tmp_path)]) == 0
    val = float(capsys.readouterr().out.split("=")[1].split()[0])
    assert val == pytest.approx(1.73038, rel=1e-4)


def test_reconstruct_refuses_outside_validity(tmp_path):
    assert run(["reconstruct", "sg", "--t", "0.5", "--out", str(tmp_path)]) == 1


def test_zeta_point(tmp_path):
    out = tmp_path / "pt"
    assert run(["zeta", "point", "--re-s", "3", "--im-max", "0", "--n", "1", "--h", str(1 / 256),
                "--out", str(out)]) == 0
    body = [ln for ln in (out / "zeta.csv").read_text().splitlines() if not ln.startswith("#")]
    assert len(body) > 1


def test_check_quick_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["check", "--quick", "--criteria", "1", "5", "--out", str(d)]) == 0
    for name in ("criterion_01.csv", "criterion_05.csv", "acceptance_summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_analyze_dust_bundle_route(tmp_path):
    out = tmp_path / "dust"
    assert run(["analyze", "dust", "--route", "bundle", "--eps-min", "1e-5", "--eps-max", "1e-3",
                "--out", str(out)]) == 0
    est = json.loads((out / "report.json").read_text())["estimates"]
    assert est["m0"]["exponent"] == pytest.approx(1.8, abs=0.05)
    assert est["m1"]["exponent"] == pytest.approx(1.2, abs=0.05)
    assert est["D"]["exponent"] == pytest.approx(est["m0"]["exponent"], abs=0.05)


def test_bad_generator_parameter_exits_one(tmp_path):
    assert run(["gen", "dust", "--alpha", "0.7", "--out", str(tmp_path)]) == 1
