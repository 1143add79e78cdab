import json

import numpy as np
import pytest
from click.testing import CliRunner

from fracss.arma import ThetaParams
from fracss.bias import bias_table
from fracss.cli import (apply_transform, break_filter, main, read_series,
                        _fmt)
from fracss.mc import DgpSpec, simulate_path
from fracss.objective import mod_term


@pytest.fixture
def runner():
    return CliRunner()


def _write_series(path, values, header=None):
    lines = ([header] if header else []) + [repr(float(v)) for v in values]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def _json_part(output):
    return json.loads(output[output.index("{"):])


def test_read_series_header_and_values(tmp_path):
    p = _write_series(tmp_path / "flow.csv", [1.0, -2.5, 3.25], header="flow")
    frame = read_series(p)
    assert frame.name == "flow"
    np.testing.assert_array_equal(frame.values, [1.0, -2.5, 3.25])
    q = _write_series(tmp_path / "bare.csv", [4.0, 5.0])
    assert read_series(q).name == "bare"


@pytest.mark.parametrize("body,msg", [
    ("1.0\n\n2.0\n", ":2: empty line"),
    ("1.0\n2.0,3.0\n", ":2: expected one column"),
    ("x\n1.0\nabc\n", ":3: cannot parse"),
    ("1.0\nnan\n", ":2: non-finite"),
    ("name\n", "no data rows"),
])
def test_read_series_rejects_bad_input(tmp_path, body, msg):
    p = tmp_path / "bad.csv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(Exception) as exc:
        read_series(str(p))
    assert msg in str(exc.value)


def test_apply_transform_log_and_diff(tmp_path):
    p = _write_series(tmp_path / "s.csv", [1.0, 2.0, 4.0])
    frame = read_series(p)
    lg = apply_transform(frame, "log")
    np.testing.assert_allclose(lg.values, np.log([1.0, 2.0, 4.0]))
    df = apply_transform(frame, "diff")
    np.testing.assert_array_equal(df.values, [1.0, 2.0])
    ld = apply_transform(frame, "logdiff")
    np.testing.assert_allclose(ld.values, np.diff(np.log([1.0, 2.0, 4.0])))
    neg = read_series(_write_series(tmp_path / "n.csv", [1.0, -1.0, 2.0]))
    with pytest.raises(Exception) as exc:
        apply_transform(neg, "log")
    assert "data row 2" in str(exc.value)


def test_break_filter_recovers_exact_step():
    x = np.where(np.arange(1, 41) <= 16, 1.0, 4.0)
    bf = break_filter(x, 0.15)
    assert bf.k == 16 and bf.tau_hat == pytest.approx(0.4)
    assert bf.mu_hat == pytest.approx(4.0)
    assert bf.beta_hat == pytest.approx(-3.0)
    assert bf.ssr == pytest.approx(0.0, abs=1e-18)
    np.testing.assert_allclose(bf.filtered, 0.0, atol=1e-12)
    with pytest.raises(Exception):
        break_filter(x[:10], 0.15)
    with pytest.raises(Exception):
        break_filter(x, 0.7)


def test_break_filter_command_reports_json(runner, tmp_path):
    x = np.where(np.arange(1, 41) <= 16, 1.0, 4.0) + 0.01 * np.sin(np.arange(40))
    p = _write_series(tmp_path / "step.csv", x, header="step")
    res = runner.invoke(main, ["break-filter", p, "--trim", "0.2"])
    assert res.exit_code == 0, res.output
    rep = _json_part(res.output)
    assert rep["command"] == "break-filter" and rep["schema_version"] == 1
    assert rep["k"] == 16
    assert rep["inputs"]["trim"] == 0.2
    assert len(rep["filtered"]) == 40


def test_estimate_command_json_and_determinism(runner, tmp_path):
    x = simulate_path(DgpSpec(d0=0.3), 60, base_seed=41, cell_index=0, rep=0)
    p = _write_series(tmp_path / "y.csv", x, header="y")
    args = ["estimate", p, "--estimator", "mcss", "--d-box", "-1:2"]
    r1 = runner.invoke(main, args)
    r2 = runner.invoke(main, args)
    assert r1.exit_code == 0, r1.output
    assert r1.output == r2.output
    rep = _json_part(r1.output)
    assert rep["command"] == "estimate"
    ins = rep["inputs"]
    assert ins["series_name"] == "y" and ins["T"] == 60
    assert ins["estimator"] == "mcss" and ins["d_box"] == [-1.0, 2.0]
    assert ins["mu0"] is None and ins["break_filter"] is False
    fit = rep["fit"]
    assert -1.0 <= fit["d"] <= 2.0
    assert fit["converged"] is True and fit["degenerate"] is False
    assert len(fit["se"]) == 1 and len(fit["t_stats"]) == 1
    assert fit["t_stats"][0] == pytest.approx(fit["d"] / fit["se"][0])


def test_estimate_command_out_file_and_variants(runner, tmp_path):
    x = simulate_path(DgpSpec(d0=0.3), 60, base_seed=41, cell_index=0, rep=0)
    p = _write_series(tmp_path / "y.csv", x, header="y")
    out = tmp_path / "fit.json"
    r = runner.invoke(main, ["estimate", p, "--estimator", "bcm",
                             "--d-box", "-1:2", "--out", str(out)])
    assert r.exit_code == 0, r.output
    rep = json.loads(out.read_text(encoding="utf-8"))
    assert rep["fit"]["message"].startswith("bias corrected")
    r2 = runner.invoke(main, ["estimate", p, "--estimator", "css-mu0",
                              "--mu0", "1.5", "--d-box", "-1:2"])
    assert r2.exit_code == 0, r2.output
    rep2 = _json_part(r2.output)
    assert rep2["inputs"]["mu0"] == 1.5
    assert rep2["fit"]["mu"] == 1.5


def test_estimate_command_flags_degenerate_series(runner, tmp_path):
    p = _write_series(tmp_path / "c.csv", np.full(30, 7.0), header="c")
    r = runner.invoke(main, ["estimate", p, "--estimator", "css",
                             "--d-box", "0:0.5"])
    assert r.exit_code == 0, r.output
    assert "degenerate" in r.output
    assert _json_part(r.output)["fit"]["degenerate"] is True


def test_estimate_command_break_and_transform(runner, tmp_path):
    x = simulate_path(DgpSpec(d0=0.2), 50, base_seed=43, cell_index=0, rep=0)
    x = np.exp(0.01 * x) + np.where(np.arange(1, 51) <= 20, 0.5, 0.0)
    p = _write_series(tmp_path / "z.csv", x, header="z")
    r = runner.invoke(main, ["estimate", p, "--transform", "log",
                             "--break-filter", "--trim", "0.2",
                             "--d-box", "-1:1"])
    assert r.exit_code == 0, r.output
    rep = _json_part(r.output)
    assert rep["inputs"]["transform"] == "log"
    assert rep["inputs"]["break_filter"] is True
    assert rep["break_fit"] is not None and rep["break_fit"]["k"] > 0


def test_estimate_command_parse_error_exit_code(runner, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y\n1.0\noops\n", encoding="utf-8")
    r = runner.invoke(main, ["estimate", str(p)])
    assert r.exit_code == 1
    assert ":3: cannot parse" in r.output


def test_bias_table_command_matches_library(runner):
    r = runner.invoke(main, ["bias-table", "--d0", "0.0,0.5,1.0", "--T", "64"])
    assert r.exit_code == 0, r.output
    lines = r.output.strip().split("\n")
    assert lines[0] == "d0,T,bias_css,bias_css_mu0,bias_mcss"
    assert len(lines) == 4
    tab = bias_table(d0_values=(0.0, 0.5, 1.0), T_values=(64,))
    f0 = lines[1].split(",")
    assert f0[0] == "0" and f0[1] == "64"
    assert float(f0[2]) == tab.total[0, 0]
    assert float(f0[3]) == float(f0[4]) == tab.constant[0]
    assert lines[2] == "0.5,64,,,"


def test_modterm_curve_command_pins(runner):
    r = runner.invoke(main, ["modterm-curve", "--T", "2", "--d-range", "0:0:0.5"])
    assert r.exit_code == 0, r.output
    assert r.output.strip().split("\n")[1] == "2,0,2"
    r2 = runner.invoke(main, ["modterm-curve", "--T", "64", "--d-range", "1:1:0.5"])
    assert r2.output.strip().split("\n")[1] == "64,1,1"
    assert mod_term(ThetaParams(d=1.0), 64) == 1.0
    r3 = runner.invoke(main, ["modterm-curve", "--d-range", "2:1:0.5"])
    assert r3.exit_code != 0


def test_simulate_command_round_trips_paths(runner):
    r = runner.invoke(main, ["simulate", "--d0", "0.3", "--T", "8",
                             "--reps", "2", "--seed", "5"])
    assert r.exit_code == 0, r.output
    lines = r.output.strip().split("\n")
    assert lines[0] == "rep,t,x" and len(lines) == 17
    dgp = DgpSpec(d0=0.3)
    for rep in range(2):
        want = simulate_path(dgp, 8, base_seed=5, cell_index=0, rep=rep)
        got = [float(lines[1 + rep * 8 + t].split(",")[2]) for t in range(8)]
        np.testing.assert_array_equal(got, want)
    assert _fmt(want[0]) in lines[9]


def test_mc_command_runs_grid(runner, tmp_path):
    cfg = {"d0": [0.3], "T": [32], "reps": 3, "base_seed": 11,
           "estimators": ["css", "mcss"], "d_box": [-1.0, 2.0]}
    cp = tmp_path / "grid.json"
    cp.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp_path / "res"
    r = runner.invoke(main, ["mc", str(cp), "--out", str(out)])
    assert r.exit_code == 0, r.output
    lines = (tmp_path / "res.csv").read_text(encoding="utf-8").strip().split("\n")
    assert lines[0].startswith("d0,phi0,T,estimator,param,")
    assert len(lines) == 3
    css_row = lines[1].split(",")
    mcss_row = lines[2].split(",")
    assert css_row[3] == "css" and mcss_row[3] == "mcss"
    assert css_row[9] != "" and mcss_row[9] == ""  # delta only on css rows
    rep = json.loads((tmp_path / "res.json").read_text(encoding="utf-8"))
    assert rep["inputs"]["reps"] == 3
    cell = rep["results"][0]
    assert cell["n_failed"] == 0
    assert set(cell["estimates"]) == {"css", "mcss"}


def test_mc_command_validates_config(runner, tmp_path):
    cp = tmp_path / "bad.json"
    cp.write_text(json.dumps({"d0": [0.3], "T": [32]}), encoding="utf-8")
    r = runner.invoke(main, ["mc", str(cp)])
    assert r.exit_code == 1 and "reps" in r.output
    cp2 = tmp_path / "bad2.json"
    cp2.write_text(json.dumps({"T": [32], "reps": 2}), encoding="utf-8")
    r2 = runner.invoke(main, ["mc", str(cp2)])
    assert r2.exit_code == 1 and "'d0'" in r2.output
    cp3 = tmp_path / "bad3.json"
    cp3.write_text(json.dumps({"d0": [0.1], "T": [32], "reps": 1,
                               "estimators": ["gph"]}), encoding="utf-8")
    r3 = runner.invoke(main, ["mc", str(cp3)])
    assert r3.exit_code == 1 and "gph" in r3.output
