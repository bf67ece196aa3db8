import json
import subprocess

import numpy as np
import pytest

from temperedwalk import cli

BASE = {
    "sigma": [
        {"direction": [1.0], "weight": 0.7},
        {"direction": [-1.0], "weight": 0.3},
    ],
    "model": {"alpha": 0.7, "x_m": 1.0, "radial": "exact_pareto"},
    "tempering": {"family": "conditionally_exponential", "rates": 1.0},
    "plan": {"n": 400, "replicates": 200, "seed": 42, "centering": "none"},
}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _cfg(**overrides):
    cfg = json.loads(json.dumps(BASE))
    for key, val in overrides.items():
        cfg[key] = val
    return cfg


def _stderr_code(capsys):
    err = capsys.readouterr().err
    return json.loads(err.strip().splitlines()[-1])["error"]["code"]


# ----------------------------------------------------------------- simulate


def test_simulate_writes_samples_and_meta(tmp_path):
    rc = cli.run(["simulate", "--config", _write(tmp_path, BASE),
                  "--out", str(tmp_path / "out")])
    assert rc == 0
    lines = (tmp_path / "out" / "samples.csv").read_text().splitlines()
    assert lines[0] == "replicate,x_1"
    assert len(lines) == 201
    assert lines[1].split(",")[0] == "0"
    meta = json.loads((tmp_path / "out" / "meta.json").read_text())
    assert meta["n"] == 400 and meta["replicates"] == 200
    assert meta["seed"] == 42 and meta["centering"] == "none"
    assert meta["v_n"] > 0 and meta["elapsed_seconds"] >= 0


def test_simulate_deterministic_and_thread_invariant(tmp_path):
    cfg = _write(tmp_path, BASE)
    for name, threads in (("a", "1"), ("b", "1"), ("c", "3")):
        rc = cli.run(["simulate", "--config", cfg,
                      "--out", str(tmp_path / name), "--threads", threads])
        assert rc == 0
    a = (tmp_path / "a" / "samples.csv").read_bytes()
    assert a == (tmp_path / "b" / "samples.csv").read_bytes()
    assert a == (tmp_path / "c" / "samples.csv").read_bytes()


def test_seed_override_changes_output(tmp_path):
    cfg = _write(tmp_path, BASE)
    cli.run(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
    cli.run(["simulate", "--config", cfg, "--out", str(tmp_path / "b"),
             "--seed", "43"])
    a = (tmp_path / "a" / "samples.csv").read_bytes()
    b = (tmp_path / "b" / "samples.csv").read_bytes()
    assert a != b
    meta = json.loads((tmp_path / "b" / "meta.json").read_text())
    assert meta["seed"] == 43


def test_simulate_2d_headers(tmp_path):
    cfg = _cfg(sigma=[{"direction": [1.0, 0.0], "weight": 1.0},
                      {"direction": [0.0, 1.0], "weight": 1.0}])
    rc = cli.run(["simulate", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 0
    head = (tmp_path / "out" / "samples.csv").read_text().splitlines()[0]
    assert head == "replicate,x_1,x_2"


# -------------------------------------------------------------------- paths


def test_paths_layout(tmp_path):
    cfg = _cfg(plan={"n": 300, "replicates": 50, "seed": 7,
                     "time_grid": [0.5, 1.0]})
    rc = cli.run(["paths", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 0
    lines = (tmp_path / "out" / "paths.csv").read_text().splitlines()
    assert lines[0] == "replicate,t,x_1"
    assert len(lines) == 1 + 50 * 2
    # replicate-major, time increasing inside each block
    assert lines[1].startswith("0,0.5,")
    assert lines[2].startswith("0,1,")
    assert lines[3].startswith("1,0.5,")


def test_paths_requires_time_grid(tmp_path, capsys):
    rc = cli.run(["paths", "--config", _write(tmp_path, BASE),
                  "--out", str(tmp_path / "out")])
    assert rc == 2
    assert _stderr_code(capsys) == "missing_time_grid"


# ----------------------------------------------------------------- cf-check


def test_cf_check_self_test_is_exact(tmp_path):
    cfg = _cfg(cf_check={"convention": "drift_free", "self_test": True,
                         "grid": {"points": 41}})
    rc = cli.run(["cf-check", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["pass"] is True
    check = report["checks"][0]
    assert set(check) >= {"test", "parameters", "statistic", "threshold", "pass"}
    assert check["statistic"] == 0.0
    table = (tmp_path / "out" / "cf_table.csv").read_text().splitlines()
    assert table[0] == "lambda_1,re_emp,im_emp,re_theory,im_theory,abs_err"
    assert len(table) == 42


def test_cf_check_simulated_passes_loose_threshold(tmp_path):
    cfg = _cfg(plan={"n": 400, "replicates": 2000, "seed": 1},
               cf_check={"convention": "drift_free", "threshold": 0.2,
                         "grid": {"points": 41}})
    rc = cli.run(["cf-check", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 0


def test_cf_check_fails_absurd_threshold(tmp_path):
    cfg = _cfg(plan={"n": 400, "replicates": 500, "seed": 1},
               cf_check={"convention": "drift_free", "threshold": 1e-9,
                         "grid": {"points": 21}})
    rc = cli.run(["cf-check", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 1  # ran fine, check failed
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["pass"] is False


def test_cf_check_reads_samples_file(tmp_path):
    out1 = tmp_path / "sim"
    cli.run(["simulate", "--config", _write(tmp_path, BASE), "--out", str(out1)])
    cfg = _cfg(cf_check={"convention": "drift_free", "threshold": 0.9,
                         "samples": str(out1 / "samples.csv"),
                         "grid": {"points": 21}})
    rc = cli.run(["cf-check", "--config", _write(tmp_path, cfg, "cfg2.json"),
                  "--out", str(tmp_path / "out")])
    assert rc == 0


# ----------------------------------------------------------------- diagnose


def test_diagnose_report(tmp_path):
    cfg = _cfg(diagnostics=[
        {"type": "vague_convergence", "n": 200, "draws": 300000, "rel_tol": 0.2,
         "sectors": [{"r_lo": 1.0}]},
        {"type": "uan", "n": 100000, "band": 0.3},
    ])
    rc = cli.run(["diagnose", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["pass"] is True
    kinds = [c["test"] for c in report["checks"]]
    assert kinds == ["vague_convergence", "uan_profile"]
    for c in report["checks"]:
        assert set(c) >= {"test", "parameters", "statistic", "threshold", "pass"}


def test_diagnose_regularity_alpha_guard(tmp_path, capsys):
    cfg = _cfg(diagnostics=[{"type": "regularity", "beta": 0.9}])
    rc = cli.run(["diagnose", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 2
    assert _stderr_code(capsys) == "invalid_config"


def test_diagnose_regularity_passes_for_heavy_alpha(tmp_path):
    cfg = _cfg(model={"alpha": 1.5},
               tempering={"family": "conditionally_exponential", "rates": 1.0},
               diagnostics=[{"type": "regularity", "beta": 1.9}])
    rc = cli.run(["diagnose", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 0


# ------------------------------------------------------------------ density


def test_density_csv_and_report(tmp_path):
    cfg = _cfg(density={"convention": "drift_free",
                        "x": {"lo": -14.0, "hi": 14.0, "points": 141}})
    rc = cli.run(["density", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 0
    lines = (tmp_path / "out" / "density.csv").read_text().splitlines()
    assert lines[0] == "x,density"
    assert len(lines) == 142
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["checks"][0]["test"] == "density_mass"
    assert report["pass"] is True


def test_density_rejects_2d(tmp_path, capsys):
    cfg = _cfg(sigma=[{"direction": [1.0, 0.0], "weight": 1.0},
                      {"direction": [0.0, 1.0], "weight": 1.0}])
    rc = cli.run(["density", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 2
    assert _stderr_code(capsys) == "dimension_unsupported"


# -------------------------------------------------------------- error paths


def test_missing_config_file(tmp_path, capsys):
    rc = cli.run(["simulate", "--config", str(tmp_path / "nope.json")])
    assert rc == 2
    assert _stderr_code(capsys) == "config_unreadable"


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{nope")
    rc = cli.run(["simulate", "--config", str(p)])
    assert rc == 2
    assert _stderr_code(capsys) == "invalid_config"


def test_jump_mean_centering_needs_heavy_alpha(tmp_path, capsys):
    cfg = _cfg(plan={"n": 100, "replicates": 10, "seed": 1,
                     "centering": "jump_mean"})
    rc = cli.run(["simulate", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 2
    assert _stderr_code(capsys) == "mean_undefined"


def test_custom_family_rejected_in_config(tmp_path, capsys):
    cfg = _cfg(tempering={"family": "custom_q", "rates": 1.0})
    rc = cli.run(["simulate", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 2
    assert _stderr_code(capsys) == "invalid_config"


def test_seed_required_somewhere(tmp_path, capsys):
    cfg = _cfg(plan={"n": 100, "replicates": 10})
    rc = cli.run(["simulate", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 2
    assert _stderr_code(capsys) == "invalid_config"


def test_rates_map_form(tmp_path):
    cfg = _cfg(tempering={"family": "conditionally_exponential",
                          "rates": {"0": 1.0, "1": 2.5}})
    rc = cli.run(["simulate", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 0


def test_rates_map_must_cover_all_atoms(tmp_path, capsys):
    cfg = _cfg(tempering={"family": "conditionally_exponential",
                          "rates": {"0": 1.0}})
    rc = cli.run(["simulate", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 2
    assert _stderr_code(capsys) == "invalid_config"


def test_tempering_alpha_must_match_model(tmp_path, capsys):
    cfg = _cfg(tempering={"family": "conditionally_exponential",
                          "rates": 1.0, "alpha": 1.1})
    rc = cli.run(["simulate", "--config", _write(tmp_path, cfg),
                  "--out", str(tmp_path / "out")])
    assert rc == 2
    assert _stderr_code(capsys) == "invalid_config"


def test_bad_threads_value(tmp_path, capsys):
    rc = cli.run(["simulate", "--config", _write(tmp_path, BASE),
                  "--out", str(tmp_path / "out"), "--threads", "0"])
    assert rc == 2
    assert _stderr_code(capsys) == "invalid_config"


def test_console_entry_point(tmp_path):
    cfg = _write(tmp_path, BASE)
    proc = subprocess.run(
        ["temperedwalk", "simulate", "--config", cfg,
         "--out", str(tmp_path / "out")],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "out" / "samples.csv").exists()

    proc = subprocess.run(["temperedwalk", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "simulate" in proc.stdout
