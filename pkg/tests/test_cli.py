import json
from pathlib import Path

import pytest

from qsppricer.cli import main


FIT_OK = """\
[fit]
degree = 20
cap = 0.9995
budget = 1e-3
[fit.target]
form = "autocall_clause"
k_t = 1.0
p = 5
s = 32.0
"""

CALL_CONFIG = """\
[call]
s0 = 100.0
k = 100.0
n_bits = 4
int_bits = 2
degree = 10
cap = 0.9995
std = 0.8
"""

AUTOCALL_CONFIG = """\
[autocall]
n_bits = 2
int_bits = 2
n_steps = 2
degree = 12
cap = 0.9995
k_t = 1.0
barrier = 1.2
std = 0.7

[[autocall.binaries]]
threshold = 1.4
t = 1
payout = 0.6
"""


def _cfg(tmp_path, text, name="config.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_fit_within_budget_exits_zero(tmp_path):
    rc = main(["--config", _cfg(tmp_path, FIT_OK), "--out-dir", str(tmp_path / "out"), "fit"])
    assert rc == 0
    poly = json.loads((tmp_path / "out" / "poly.json").read_text())
    assert poly["degree"] == 20
    assert poly["max_err"] <= 1e-3
    csv_lines = (tmp_path / "out" / "fit.csv").read_text().splitlines()
    assert csv_lines[0] == "x,f,P,abs_err"


def test_fit_over_budget_exits_two(tmp_path):
    rc = main(["--config", _cfg(tmp_path, FIT_OK), "--out-dir", str(tmp_path / "out"),
               "--degree", "4", "fit"])
    assert rc == 2


def test_fit_malformed_config_exits_64(tmp_path):
    rc = main(["--config", _cfg(tmp_path, "[fit]\ndegree = 4\n"),
               "--out-dir", str(tmp_path / "out"), "fit"])
    assert rc == 64


def test_fit_invalid_target_exits_64(tmp_path):
    bad = FIT_OK.replace('k_t = 1.0', 'k_t = 7.0')
    rc = main(["--config", _cfg(tmp_path, bad), "--out-dir", str(tmp_path / "out"), "fit"])
    assert rc == 64


def test_phases_and_verify_round_trip(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", _cfg(tmp_path, FIT_OK), "--out-dir", str(out), "fit"]) == 0
    assert main(["--out-dir", str(out), "phases", "--poly", str(out / "poly.json")]) == 0
    phases = json.loads((out / "phases.json").read_text())
    assert len(phases["phases"]) == 20
    assert phases["residual"] <= 1e-8
    rc = main(["--out-dir", str(out), "verify", "--poly", str(out / "poly.json"),
               "--phases", str(out / "phases.json")])
    assert rc == 0
    report = json.loads((out / "verify.json").read_text())
    assert report["pass"] is True


def test_phases_norm_violation_exits_three(tmp_path):
    poly = tmp_path / "poly.json"
    poly.write_text(json.dumps({
        "parity": "even", "degree": 4, "coeffs": [0.0, 0.0, 1.0000001],
        "cap": 1.0, "max_err": 0.0}))
    rc = main(["--out-dir", str(tmp_path / "out"), "phases", "--poly", str(poly)])
    assert rc == 3


def test_simulate_subcommand(tmp_path):
    from qsppricer import build_comparator

    circ_path = tmp_path / "circ.json"
    circ_path.write_text(build_comparator(2).to_json())
    out = tmp_path / "out"
    # a=1, b=2 -> result qubit (index 4) reads 1
    rc = main(["--out-dir", str(out), "simulate", "--circuit", str(circ_path),
               "--initial", str(1 | (2 << 2)), "--projector", "4:1"])
    assert rc == 0
    result = json.loads((out / "simulate.json").read_text())
    assert result["probability"] == pytest.approx(1.0)


def test_simulate_width_cap_exits_four(tmp_path):
    from qsppricer import Circuit

    circ_path = tmp_path / "circ.json"
    circ_path.write_text(Circuit(8).to_json())
    rc = main(["--out-dir", str(tmp_path / "out"), "--width-cap", "4",
               "simulate", "--circuit", str(circ_path)])
    assert rc == 4


def test_price_call_exits_zero_within_budget(tmp_path):
    out = tmp_path / "out"
    rc = main(["--config", _cfg(tmp_path, CALL_CONFIG), "--out-dir", str(out), "price-call"])
    assert rc == 0
    pair = json.loads((out / "price.json").read_text())
    assert pair["within_budget"] is True
    assert pair["abs_err"] <= pair["budget"]


def test_price_call_capacity_exit_four(tmp_path):
    cfg = CALL_CONFIG.replace("n_bits = 4", "n_bits = 12").replace("int_bits = 2", "int_bits = 4")
    rc = main(["--config", _cfg(tmp_path, cfg), "--out-dir", str(tmp_path / "out"),
               "--degree", "4", "price-call"])
    assert rc == 4


def test_price_autocall_exits_zero(tmp_path):
    out = tmp_path / "out"
    rc = main(["--config", _cfg(tmp_path, AUTOCALL_CONFIG), "--out-dir", str(out),
               "price-autocall"])
    assert rc == 0
    pair = json.loads((out / "price.json").read_text())
    assert pair["within_budget"] is True
    assert "notional_value" in pair


def test_resources_builtin_rows(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["--out-dir", str(out), "resources"])
    assert rc == 0
    reports = json.loads((out / "advantage.json").read_text())
    by_label = {r["label"]: r for r in reports}
    assert by_label["QSP-U_sqrt"]["n_queries"] == 5734
    assert abs(by_label["QSP-U_sqrt"]["clock_rate_hz"] - 45e6) / 45e6 < 0.05
    assert abs(by_label["Arithmetic"]["clock_rate_hz"] - 207e6) / 207e6 < 0.05
    assert abs(by_label["QSP-U_sin"]["clock_rate_hz"] - 430e6) / 430e6 < 0.05
    assert (out / "comparison.md").exists()


def test_resources_custom_rows_identity(tmp_path):
    rows = tmp_path / "rows.json"
    rows.write_text(json.dumps([
        {"label": "Base", "t_count": 100, "t_depth": 10, "logical_qubits": 5},
        {"label": "Same", "t_count": 100, "t_depth": 10, "logical_qubits": 5},
    ]))
    out = tmp_path / "out"
    rc = main(["--out-dir", str(out), "resources", "--rows", str(rows)])
    assert rc == 0
    table = (out / "comparison.md").read_text()
    assert "1.0x" in table


def test_resources_malformed_rows_exit_64(tmp_path):
    rows = tmp_path / "rows.json"
    rows.write_text("[{\"label\": \"X\"}]")
    rc = main(["--out-dir", str(tmp_path / "out"), "resources", "--rows", str(rows)])
    assert rc == 64


def test_outputs_byte_identical_across_runs(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    cfg = _cfg(tmp_path, FIT_OK)
    assert main(["--config", cfg, "--out-dir", str(out1), "fit"]) == 0
    assert main(["--config", cfg, "--out-dir", str(out2), "fit"]) == 0
    assert (out1 / "poly.json").read_bytes() == (out2 / "poly.json").read_bytes()
    assert (out1 / "fit.csv").read_bytes() == (out2 / "fit.csv").read_bytes()
