import csv
import filecmp
import json

import numpy as np
import pytest

from delayadm import cli

SCALAR_ORACLE = {
    "experiment": "simulate",
    "system": {"A": [[0.0]], "delays": [{"matrix": [[1.0]], "h": 1.0}]},
    "grid": {"m": 200, "dt": 0.001},
    "params": {
        "T_end": 2.0,
        "initial": {"x": [1.0], "f": {"kind": "constant", "value": [1.0]}},
    },
    "seed": 42,
}

BOUNDS_UNPERTURBED = {
    "experiment": "bounds",
    "system": {"A": [[-0.5]], "delays": [{"matrix": [[0.0]], "h": 1.0}]},
    "grid": {"m": 100},
    "params": {"ts": [0.1 * k for k in range(1, 11)], "t0": 0.25},
    "seed": 42,
}

ADMISSIBILITY_STABLE = {
    "experiment": "admissibility",
    "system": {
        "A": [[-1.0]],
        "delays": [{"matrix": [[0.0]], "h": 1.0}],
        "B": [[1.0]],
    },
    "grid": {"m": 100},
    "params": {
        "omega_ref": 0.0,
        "taus": [1.0],
        "lambdas": [[0.5, 0.0], [1.0, 0.0], [1.0, 1.0]],
    },
    "seed": 42,
}

ADJOINT_CHECK = {
    "experiment": "adjoint-check",
    "system": {"A": [[0.0]], "delays": [{"matrix": [[1.0]], "h": 1.0}]},
    "grid": {"m": 200},
    "params": {"pairs": 50, "tolerance": 0.01},
    "seed": 42,
}

POPULATION_DEMO = {
    "experiment": "population-demo",
    "system": {
        "population": {
            "n": 80,
            "s_max": 5.0,
            "mu": {"kind": "constant", "value": 1.0},
            "nu": {"kind": "constant", "value": 0.2},
            "beta": {"kind": "gaussian", "center": 1.0, "width": 0.5, "scale": 0.3},
            "initial": {"kind": "gaussian", "center": 1.5, "width": 0.3},
        }
    },
    "grid": {"m": 40},
    "params": {"T_end": 1.5},
    "seed": 42,
}

GOLDEN = {
    "simulate": SCALAR_ORACLE,
    "bounds": BOUNDS_UNPERTURBED,
    "admissibility": ADMISSIBILITY_STABLE,
    "adjoint-check": ADJOINT_CHECK,
    "population-demo": POPULATION_DEMO,
}


def _write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


def test_simulate_oracle_artifact(tmp_path):
    cfg = _write_config(tmp_path, SCALAR_ORACLE)
    code = cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "out" / "trajectory.csv")))
    z1 = next(r for r in rows if abs(float(r["t"]) - 1.0) < 1e-12)
    z2 = next(r for r in rows if abs(float(r["t"]) - 2.0) < 1e-12)
    assert abs(float(z1["re(z_1)"]) - 2.0) < 1e-5
    assert abs(float(z2["re(z_1)"]) - 3.5) < 1e-5
    manifest = json.loads((tmp_path / "out" / "run.json").read_text())
    assert manifest["status"] == "ok"


def test_bounds_unperturbed_all_pass(tmp_path):
    cfg = _write_config(tmp_path, BOUNDS_UNPERTURBED)
    code = cli.main(["bounds", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert code == 0
    manifest = json.loads((tmp_path / "out" / "run.json").read_text())
    names = {c["name"] for c in manifest["checks"]}
    assert {"bound_T0", "bound_gronwall", "bound_main", "mv_chain"} <= names
    assert all(c["passed"] for c in manifest["checks"])


def test_admissibility_summary_value(tmp_path):
    cfg = _write_config(tmp_path, ADMISSIBILITY_STABLE)
    code = cli.main(
        ["admissibility", "--config", str(cfg), "--out", str(tmp_path / "out")]
    )
    assert code == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert abs(summary["C_est"] - 0.61) <= 0.01
    assert (tmp_path / "out" / "sweep.csv").exists()
    assert (tmp_path / "out" / "finite_time.csv").exists()


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_determinism_byte_identical(name, tmp_path):
    """Two runs of each golden config produce byte-identical artifacts.

    run.json is exempt: it records wall-clock timings by design.
    """
    cfg = _write_config(tmp_path, GOLDEN[name])
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main([name, "--config", str(cfg), "--out", str(out1)]) == \
        cli.main([name, "--config", str(cfg), "--out", str(out2)])
    files = sorted(p.name for p in out1.iterdir() if p.name != "run.json")
    assert files == sorted(p.name for p in out2.iterdir() if p.name != "run.json")
    for fname in files:
        assert filecmp.cmp(out1 / fname, out2 / fname, shallow=False), fname


def test_exit_code_config_error(tmp_path):
    bad = dict(SCALAR_ORACLE)
    bad["grid"] = {"m": 200, "dt": 0.0003}  # does not divide 1/m
    cfg = _write_config(tmp_path, bad)
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_exit_code_failed_check(tmp_path):
    tight = json.loads(json.dumps(ADJOINT_CHECK))
    tight["params"]["tolerance"] = 1e-9  # unattainable at m = 200
    cfg = _write_config(tmp_path, tight)
    assert cli.main(["adjoint-check", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_exit_code_missing_config(tmp_path):
    assert cli.main(["simulate", "--config", str(tmp_path / "nope.json")]) == 1


def test_validate_reports_diagnostics():
    diags = cli.validate(
        {
            "experiment": "bounds",
            "system": {"A": [[0.5]], "delays": [{"matrix": [[0.0]], "h": 1.0}]},
            "grid": {"m": 100},
        }
    )
    assert any("contraction certificate failed" in d for d in diags)
    diags2 = cli.validate(
        {
            "experiment": "simulate",
            "system": {"A": [[0.0]], "delays": [{"matrix": [[1.0]], "h": 1.0}]},
            "grid": {"m": 100, "dt": 0.003},
        }
    )
    assert any("does not divide" in d for d in diags2)
    assert cli.validate(SCALAR_ORACLE) == []


def test_validate_cfl_diagnostic():
    bad = json.loads(json.dumps(POPULATION_DEMO))
    bad["system"]["population"]["n"] = 800  # ds = 0.00625 < dt = 0.0125
    diags = cli.validate(bad)
    assert any("CFL" in d for d in diags)


def test_seed_override_changes_manifest(tmp_path):
    cfg = _write_config(tmp_path, ADJOINT_CHECK)
    cli.main(["adjoint-check", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "7"])
    manifest = json.loads((tmp_path / "o" / "run.json").read_text())
    assert manifest["seed"] == 7


def test_refine_flag_scales_grid(tmp_path):
    cfg = _write_config(tmp_path, dict(SCALAR_ORACLE))
    code = cli.main(
        ["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--refine", "2"]
    )
    assert code == 0
    rows = list(csv.reader(open(tmp_path / "o" / "trajectory.csv")))
    # dt halves, so twice as many steps
    assert len(rows) - 1 == int(round(3.0 / 0.0005)) + 1


def test_float_format_17_digits():
    assert cli.fmt(1.0) == "1.0000000000000000e+00"
    assert cli.fmt(np.pi) == "3.1415926535897931e+00"


def test_simulate_with_sampled_input(tmp_path):
    # forced scalar a=-1, u=1 sampled as an array: z(1) = 1 - e^{-1}
    config = {
        "experiment": "simulate",
        "system": {
            "A": [[-1.0]],
            "delays": [{"matrix": [[0.0]], "h": 1.0}],
            "B": [[1.0]],
        },
        "grid": {"m": 100, "dt": 0.005},
        "params": {
            "T_end": 1.0,
            "initial": {"x": [0.0], "f": {"kind": "constant", "value": [0.0]}},
            "input": [[1.0]] * 201,
        },
        "seed": 42,
    }
    cfg = _write_config(tmp_path, config)
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "o" / "trajectory.csv")))
    z1 = next(r for r in rows if abs(float(r["t"]) - 1.0) < 1e-12)
    assert abs(float(z1["re(z_1)"]) - (1.0 - np.exp(-1.0))) < 1e-5
    checkpoint = json.loads((tmp_path / "o" / "final_state.json").read_text())
    assert checkpoint["tail"]["m"] == 100
    assert abs(checkpoint["head"][0][0] - (1.0 - np.exp(-1.0))) < 1e-5
