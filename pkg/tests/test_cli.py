import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from hvsis.cli import RunConfig, dumps, fmt_json_float, main

FIXTURES = Path(__file__).parent / "fixtures"


def run(command, fixture=None, *extra, tmp_path):
    out = tmp_path / f"{command}-{fixture or 'stdin'}.out"
    argv = [command, str(FIXTURES / fixture) if fixture else "-", "--out", str(out), *extra]
    code = main(argv)
    return code, out.read_text() if out.exists() else ""


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


class TestSimulate:
    @pytest.mark.parametrize("fixture,limit", [
        ("fig2a.json", (0.0, 1.0, 0.0, 1.0)),
        ("fig2b.json", (0.25, 4 / 3, 2 / 3, 2.0)),
    ])
    def test_final_row(self, tmp_path, fixture, limit):
        code, text = run("simulate", fixture, tmp_path=tmp_path)
        assert code == 0
        assert text.startswith("t,x,y,z,v\n")
        assert text.splitlines()[-1] == "# terminal_reason=horizon"
        last = rows(text)[-1]
        got = [float(last[k]) for k in "xyzv"]
        assert got == pytest.approx(limit, abs=1e-6)
        assert float(last["t"]) == 500.0

    def test_t_max_zero(self, tmp_path):
        code, text = run("simulate", "t_max_zero.json", tmp_path=tmp_path)
        assert code == 0
        lines = text.splitlines()
        assert lines[0] == "t,x,y,z,v"
        assert lines[1] == "0.0,0.01,2.0,0.05,2.05"
        assert lines[2:] == ["# terminal_reason=horizon"]

    def test_lf_line_endings(self, tmp_path):
        run("simulate", "t_max_zero.json", tmp_path=tmp_path)
        raw = (tmp_path / "simulate-t_max_zero.json.out").read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")

    def test_guard_violation_exits_1(self, tmp_path):
        cfg = tmp_path / "guard.json"
        cfg.write_text(json.dumps({"method": "rk4", "step": 50.0, "t_max": 200.0}))
        out = tmp_path / "g.csv"
        assert main(["simulate", str(cfg), "--out", str(out)]) == 1
        assert "# terminal_reason=guard-violation" in out.read_text()


class TestAnalyze:
    def test_below(self, tmp_path):
        code, text = run("analyze", "fig2a.json", tmp_path=tmp_path)
        doc = json.loads(text)
        assert code == 0
        assert doc["sigma0"] == 0.5 and doc["regime"] == "disease-free"
        assert "ee" not in doc and doc["stability_dfe"] == "exponentially stable"
        assert doc["predicted_limit"] == [0.0, 1.0, 0.0]

    def test_above(self, tmp_path):
        _, text = run("analyze", "fig2b.json", tmp_path=tmp_path)
        doc = json.loads(text)
        assert '"sigma0": 2.0,' in text
        assert doc["ee"] == pytest.approx([0.25, 4 / 3, 2 / 3], rel=1e-15)
        assert doc["regime"] == "endemic" and doc["stability_ee"] == "exponentially stable"
        assert doc["stability_dfe"] == "unstable"
        assert doc["elasticities"] == {"beta_h": 1.0, "beta_v": 1.0, "gamma": -1.0,
                                       "mu": -2.0, "omega": 1.0}

    def test_beta_v_zero(self, tmp_path):
        code, text = run("analyze", "beta_v_zero.json", tmp_path=tmp_path)
        doc = json.loads(text)
        assert code == 0
        assert doc["sigma0"] == 0.0 and "ee" not in doc and doc["elasticities"] is None

    @pytest.mark.parametrize("fixture", ["fig2a.json", "fig2b.json", "beta_v_zero.json"])
    def test_round_trip_consistency(self, tmp_path, fixture):
        _, text = run("analyze", fixture, tmp_path=tmp_path)
        doc = json.loads(text)
        assert list(doc) == sorted(doc)
        assert ("ee" in doc) == (doc["sigma0"] > 1.0)
        assert ("eigenvalues_ee" in doc) == ("ee" in doc) == ("stability_ee" in doc)
        lead = max(re for re, _ in doc["eigenvalues_dfe"])
        assert (lead < 0) == (doc["sigma0"] < 1)
        assert doc["predicted_limit"] == (doc["ee"] if "ee" in doc else doc["dfe"])
        # floats re-serialize to the same text
        assert dumps(doc) + "\n" == text


class TestSweep:
    def test_rows(self, tmp_path):
        code, text = run("sweep", "fig4_sweep.json", tmp_path=tmp_path)
        assert code == 0
        table = rows(text)
        assert len(table) == 30
        by_key = {(float(r["u1"]), float(r["u2"])): r for r in table}
        assert float(by_key[0.0, 0.0]["x_ee"]) == 0.25
        assert float(by_key[0.01, 0.0]["x_ee"]) == pytest.approx(0.00316 / 0.0168, rel=1e-12)
        assert by_key[0.05, 0.0]["x_ee"] == by_key[0.05, 0.0]["z_ee"] == ""
        for r in table:
            assert (r["x_ee"] == "") == (float(r["sigma_c"]) <= 1.0)

    def test_grid_order(self, tmp_path):
        _, text = run("sweep", "fig4_sweep.json", tmp_path=tmp_path)
        keys = [(float(r["u1"]), float(r["u2"])) for r in rows(text)]
        assert keys == sorted(keys)


class TestRegion:
    def test_fig5a(self, tmp_path):
        code, text = run("region", "fig5a_region.json", tmp_path=tmp_path)
        assert code == 0
        table = {float(r["c1"]): r for r in rows(text)}
        assert (table[5.0]["in_C"], table[5.0]["policy"]) == ("true", "protection")
        assert (table[4.0]["in_C"], table[4.0]["policy"]) == ("false", "vector-control")
        for c1, r in table.items():
            assert (r["in_C"] == "true") == (c1 > 4.8284)

    def test_below_threshold(self, tmp_path):
        _, text = run("region", "below_region.json", tmp_path=tmp_path)
        assert {r["policy"] for r in rows(text)} == {"none-needed"}


class TestOptimize:
    def test_vector(self, tmp_path):
        code, text = run("optimize", "optimize_vector.json", tmp_path=tmp_path)
        doc = json.loads(text)
        assert code == 0
        assert doc["u1_star"] == pytest.approx(0.041421356, abs=1e-9)
        assert doc["u2_star"] == 0.0 and doc["policy"] == "vector-control"
        assert doc["provenance"] == "closed-form"

    def test_protection(self, tmp_path):
        _, text = run("optimize", "optimize_protection.json", tmp_path=tmp_path)
        doc = json.loads(text)
        assert doc["u1_star"] == 0.0 and doc["u2_star"] == pytest.approx(0.1, rel=1e-14)

    @pytest.mark.parametrize("fixture", ["optimize_vector.json", "optimize_protection.json",
                                         "optimize_quadratic.json"])
    def test_verify_grid(self, tmp_path, fixture):
        code, text = run("optimize", fixture, "--verify-grid", "2001", tmp_path=tmp_path)
        doc = json.loads(text)
        assert code == 0
        assert doc["grid_gap"] >= -1e-12

    def test_quadratic(self, tmp_path):
        _, text = run("optimize", "optimize_quadratic.json", tmp_path=tmp_path)
        doc = json.loads(text)
        assert doc["provenance"] == "kkt-newton" and doc["policy"] == "mixed"
        assert doc["kkt_residual"] <= 1e-10
        assert doc["sigma_c"] == pytest.approx(1.0, abs=1e-10)


class TestVerify:
    def test_default_passes(self, tmp_path):
        code, text = run("verify", "verify.json", tmp_path=tmp_path)
        doc = json.loads(text)
        assert code == 0 and doc["passed"]
        assert {c["name"] for c in doc["checks"]} >= {
            "boundary_flow", "metzler", "monotone_order", "threshold_eigen_consistency"}
        assert all(c["status"] == "pass" for c in doc["checks"])

    def test_beta_v_zero_skips_sensitivity(self, tmp_path):
        code, text = run("verify", "beta_v_zero.json", tmp_path=tmp_path)
        status = {c["name"]: c["status"] for c in json.loads(text)["checks"]}
        assert code == 0
        assert status.pop("sensitivity") == "skipped"
        assert set(status.values()) == {"pass"}


class TestExitCodes:
    def test_negative_gamma(self, tmp_path, capsys):
        code, text = run("verify", "bad_gamma.json", tmp_path=tmp_path)
        assert code == 2 and text == ""
        assert "gamma" in capsys.readouterr().err

    @pytest.mark.parametrize("payload", [
        '{"nonsense": 1}', '{"mu": "fast"}', '[1, 2]', '{', '{"u2": 0.5}', '{"x0": 1.5}',
        '{"steady_state": 1}', '{"cost": "cubic"}', '{"record_stride": 1.5}',
    ])
    def test_config_errors(self, tmp_path, payload, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(payload)
        assert main(["analyze", str(cfg)]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["analyze", str(tmp_path / "absent.json")]) == 2

    def test_stdin(self, monkeypatch, capsys):
        monkeypatch.setattr(sys, "stdin", io.StringIO('{"mu": 0.2, "y0": 1.0}'))
        assert main(["analyze"]) == 0
        assert json.loads(capsys.readouterr().out)["sigma0"] == 0.5

    def test_module_entry(self):
        proc = subprocess.run([sys.executable, "-m", "hvsis.cli", "analyze",
                               str(FIXTURES / "bad_gamma.json")], capture_output=True, text=True)
        assert proc.returncode == 2 and proc.stdout == ""


ALL_RUNS = [
    ("simulate", "fig2a.json"), ("simulate", "fig2b.json"), ("analyze", "fig2b.json"),
    ("sweep", "fig4_sweep.json"), ("region", "fig5a_region.json"),
    ("optimize", "optimize_quadratic.json"), ("verify", "verify.json"),
]


@pytest.mark.parametrize("command,fixture", ALL_RUNS)
def test_byte_identical(tmp_path, command, fixture):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([command, str(FIXTURES / fixture), "--out", str(a)]) == 0
    assert main([command, str(FIXTURES / fixture), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_json_float_format():
    assert fmt_json_float(2.0) == "2.0"
    assert fmt_json_float(0.1) == "0.10000000000000001"
    assert fmt_json_float(1e-20) == "9.9999999999999995e-21"
    assert float(fmt_json_float(4 / 3)) == 4 / 3


def test_defaults_valid():
    RunConfig().validate()
