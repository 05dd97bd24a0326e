import json
import math
import subprocess
import sys

import pytest

from collgate.cli import build_parser, main, merge_config


def run(argv, capsys):
    rc = main(argv)
    out, err = capsys.readouterr()
    return rc, out, err


def test_simulate_preset_bb(tmp_path, capsys):
    rc, out, _ = run(["--out", str(tmp_path), "simulate", "--preset", "paper-fig2", "--mode", "bb"], capsys)
    assert rc == 0
    s = json.loads((tmp_path / "summary_bb.json").read_text())
    assert s["phi_coll"] == pytest.approx(math.pi, rel=0.05)
    assert "perturbative regime violated" in s["flags"]
    lines = (tmp_path / "trajectory_bb.csv").read_text().splitlines()
    assert lines[0].startswith("# collgate trajectory csv v1")
    assert len(lines) == 2 + 7 * 512 + 1


def test_simulate_zero_scattering(tmp_path, capsys):
    rc, out, _ = run(["simulate", "--preset", "paper-fig2", "--a-bb", "0", "--out", str(tmp_path)], capsys)
    assert rc == 0
    s = json.loads(out)
    assert s["phi_coll"] == 0.0 and s["O0_abs"] == 1.0


def test_outputs_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["simulate", "--n-periods", "1", "--out", str(d)], capsys)[0] == 0
    for name in ("summary_bb.json", "trajectory_bb.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_env_output_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("COLLGATE_OUT", str(tmp_path / "env"))
    assert run(["simulate", "--n-periods", "1"], capsys)[0] == 0
    assert (tmp_path / "env" / "summary_bb.json").exists()


def test_precedence_flags_over_file_over_preset(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("x0_over_ax = 4.5\nn_periods = 2\n")
    args = build_parser().parse_args(["simulate", "--preset", "paper-fig2", "--config", str(cfg),
                                      "--n-periods", "1"])
    from collgate.cli import resolve_config
    c = resolve_config(args)
    assert c["x0_over_ax"] == 4.5 and c["n_periods"] == 1 and c["a_bb_nm"] == 5.1


def test_alias_override_drops_si_value():
    c = merge_config({"a_bb_nm": 5.1, "x0_over_ax": 5}, {"a_bb_over_ax": 0.0})
    assert "a_bb_nm" not in c and c["a_bb_over_ax"] == 0.0


def test_sweep_empty_range(tmp_path, capsys):
    rc, _, _ = run(["sweep", "--axis", "a_bb", "--values", "", "--out", str(tmp_path)], capsys)
    assert rc == 0
    lines = (tmp_path / "sweep_a_bb.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("axis,value,phi_coll")


def test_sweep_monotone_in_scattering_length(tmp_path, capsys):
    rc, _, _ = run(["sweep", "--preset", "paper-fig2", "--axis", "a_bb", "--values", "0:0.06:4",
                    "--n-periods", "1", "--jobs", "2", "--out", str(tmp_path)], capsys)
    assert rc == 0
    rows = (tmp_path / "sweep_a_bb.csv").read_text().splitlines()[2:]
    vals = [float(r.split(",")[1]) for r in rows]
    phis = [float(r.split(",")[2]) for r in rows]
    assert vals == sorted(vals)
    assert phis[0] == 0.0 and all(b > a for a, b in zip(phis, phis[1:]))


def test_sweep_periods_additive(tmp_path, capsys):
    rc, _, _ = run(["sweep", "--preset", "paper-fig2", "--axis", "N", "--values", "1,3,7",
                    "--out", str(tmp_path)], capsys)
    assert rc == 0
    rows = [r.split(",") for r in (tmp_path / "sweep_N.csv").read_text().splitlines()[2:]]
    per = float(rows[0][2])
    for r in rows:
        assert float(r[2]) == pytest.approx(float(r[1]) * per, rel=0.03)


def test_fidelity_command(tmp_path, capsys):
    rc, _, _ = run(["fidelity", "--preset", "paper-fig2", "--temps", "0,2", "--jobs", "4",
                    "--out", str(tmp_path)], capsys)
    assert rc == 0
    rep = json.loads((tmp_path / "fidelity.json").read_text())
    assert rep["F0"] == pytest.approx(0.99, abs=0.01)
    assert rep["FT"][0][2] == rep["F0"]
    assert rep["FT"][1][2] == pytest.approx(0.96, abs=0.02)
    assert rep["T_kelvin"][1] * 1e6 == pytest.approx(3.3, abs=0.1)


def test_trapfield_command(tmp_path, capsys):
    rc, _, _ = run(["trapfield", "--out", str(tmp_path), "--nx", "5", "--nz", "4"], capsys)
    assert rc == 0
    info = json.loads((tmp_path / "trapfield.json").read_text())
    assert info["minimum_spacing_m"] == pytest.approx(1e-6)
    assert info["f_x_hz"] == pytest.approx(info["f_z_hz"], rel=1e-5)
    assert len((tmp_path / "field_map.csv").read_text().splitlines()) == 2 + 20


def test_error_json_and_exit_code(tmp_path, capsys):
    rc, _, err = run(["trapfield", "--bias-y", "0", "--out", str(tmp_path)], capsys)
    assert rc != 0
    e = json.loads(err)
    assert e["error"] == "spin_flip_hazard" and e["locations"]
    rc, _, err = run(["simulate", "--set", "bogus=1", "--out", str(tmp_path)], capsys)
    assert rc != 0 and json.loads(err)["error"] == "contract"
    rc, _, err = run(["simulate", "--n-max", "10", "--out", str(tmp_path)], capsys)
    assert rc != 0 and json.loads(err)["error"] == "truncation"


def test_validate_subset(tmp_path, capsys):
    rc, out, _ = run(["validate", "--only", "2,8", "--out", str(tmp_path)], capsys)
    assert rc == 0
    assert out.count("[PASS]") == 2
    assert json.loads((tmp_path / "validate.json").read_text())["passed"] is True


def test_validate_fault_injection(tmp_path, capsys):
    """Negative control: a 20% error in a_s must be caught."""
    rc, out, _ = run(["validate", "--only", "2", "--preset", "paper-fig2", "--set", "a_bb_nm=6.1",
                      "--out", str(tmp_path)], capsys)
    assert rc == 1
    assert "[FAIL] 2." in out


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "collgate.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "collgate" in r.stdout
    r = subprocess.run([sys.executable, "-m", "collgate.cli", "simulate", "--omega0", "-1",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode != 0
    assert json.loads(r.stderr.strip().splitlines()[-1])["type"]


@pytest.mark.slow
def test_simulate_ab_recurrences_decay(tmp_path, capsys):
    rc, _, _ = run(["simulate", "--preset", "paper-fig2", "--mode", "ab", "--n-R", "40", "--n-r", "70",
                    "--samples", "64", "--n-periods", "4", "--rtol", "1e-8", "--atol", "1e-10",
                    "--out", str(tmp_path)], capsys)
    # reduced basis trips the default 1e-6 tail guard
    assert rc != 0
    rc, _, _ = run(["simulate", "--preset", "paper-fig2", "--mode", "ab", "--n-R", "40", "--n-r", "70",
                    "--samples", "64", "--n-periods", "4", "--rtol", "1e-8", "--atol", "1e-10",
                    "--tail-tol", "1e-3", "--out", str(tmp_path)], capsys)
    assert rc == 0
    rows = [list(map(float, r.split(","))) for r in (tmp_path / "trajectory_ab.csv").read_text().splitlines()[2:]]
    peaks = [max(r[4] for r in rows if abs(r[0] - k) < 0.1) for k in range(1, 5)]
    assert all(b < a for a, b in zip(peaks, peaks[1:]))
    s = json.loads((tmp_path / "summary_ab.json").read_text())
    assert s["kind"] == "ab"
