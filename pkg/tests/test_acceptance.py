"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with -s to see them).  The suite
is oracle-based: hand method-of-steps values, closed forms, Newton roots,
grid-search and chord-check oracles, plus refinement studies.
"""

import filecmp
import json
import time

import numpy as np
import pytest

from delayadm import admissibility as adm
from delayadm import adjoint, bounds, cli, population, semigroup
from delayadm.state import HistorySegment, LiftedState
from delayadm.system import DelaySystem, GridSpec, random_contraction_system

from conftest import scalar_state, scalar_system


def _report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:02d} {name}: {status} {detail}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


@pytest.fixture(scope="module")
def suite():
    return [random_contraction_system(seed, 1 + seed % 4, delay_norm=0.5) for seed in range(20)]


def test_01_scalar_delay_oracle():
    start = time.perf_counter()
    traj = semigroup.simulate_steps(
        scalar_system(0.0, 1.0), scalar_state(1.0, 1.0), 2.0, GridSpec(200, 1e-3)
    )
    err1 = abs(traj.state_at(1.0)[0] - 2.0)
    err2 = abs(traj.state_at(2.0)[0] - 3.5)
    elapsed = time.perf_counter() - start
    _report(
        1,
        "scalar delay oracle",
        err1 < 1e-5 and err2 < 1e-5 and elapsed < 1.0,
        f"|z(1)-2|={err1:.2e} |z(2)-3.5|={err2:.2e} runtime={elapsed:.2f}s",
    )


def test_02_T0_hypercontractivity(suite):
    start = time.perf_counter()
    grid = GridSpec(100)
    ts = [round(0.1 * k, 10) for k in range(1, 21)]
    worst = np.inf
    ok = True
    for sysk in suite:
        rep = bounds.check_T0_bound(sysk, ts, grid)
        ok = ok and rep.passed
        worst = min(worst, rep.margin + rep.slack)
    elapsed = time.perf_counter() - start
    _report(
        2,
        "T0 bound e^{t/2} and sqrt(1+t)",
        ok and elapsed < 30.0,
        f"worst slack-adjusted margin={worst:.2e} runtime={elapsed:.1f}s",
    )


@pytest.fixture(scope="module")
def delay_norms(suite):
    """Measured ||T(t)|| for the suite at both delay strengths, with slack."""
    grid = GridSpec(100)
    ts = [round(0.1 * k, 10) for k in range(1, 11)]
    out = {}
    for a1_norm in (0.5, 1.0):
        for idx, sysk in enumerate(suite):
            sysd = sysk.scaled_delay(a1_norm / 0.5)
            norms = bounds.measure_delay_norms(sysd, ts, grid)
            coarse = bounds.measure_delay_norms(sysd, ts, grid.coarsened())
            slack = bounds._refinement_slack(coarse, norms)
            out[(a1_norm, idx)] = (sysd, ts, norms, slack)
    return out


def test_03_gronwall_bound(delay_norms):
    grid = GridSpec(100)
    ok = True
    worst = np.inf
    for (a1_norm, idx), (sysd, ts, norms, slack) in delay_norms.items():
        rep = bounds.check_gronwall(sysd, ts, grid, slack, norms)
        ok = ok and rep.passed
        worst = min(worst, rep.margin + rep.slack)
    _report(3, "Gronwall rescaled bound", ok, f"worst slack-adjusted margin={worst:.2e}")


def test_04_main_norm_bound(delay_norms):
    grid = GridSpec(100)
    ok = True
    for (a1_norm, idx), (sysd, ts, norms, slack) in delay_norms.items():
        rep = bounds.check_main_bound(sysd, ts, grid, slack, norms)
        ok = ok and rep.passed
        ok = ok and rep.extra["M_measured"] <= rep.extra["M_cap"] + rep.slack
    _report(4, "main bound with M cap", ok)


def test_05_miyadera_voigt():
    q = bounds.miyadera_voigt_q(scalar_system(0.0, 1.0), 0.25, GridSpec(200))
    rel = abs(q - 0.5) / 0.5
    _report(
        5,
        "Miyadera-Voigt q(0.25)",
        rel <= 0.02 and q <= 0.75,
        f"q={q:.4f} rel-err={rel:.3%} chain bound 0.75",
    )


def test_06_cross_method_agreement():
    grid = GridSpec(200, 1e-3)
    sys1 = scalar_system(0.0, 1.0)
    v1 = scalar_state(1.0, 1.0)
    gap1, _ = semigroup.cross_method_gap(sys1, 0.5, v1, grid)
    sys3 = random_contraction_system(7, 3, delay_norm=0.5)
    f3 = HistorySegment.from_function(
        lambda s: np.array([np.exp(s), np.cos(s), s + 1.0]), 200
    )
    v3 = LiftedState(f3.values[-1].copy(), f3)
    gap3, _ = semigroup.cross_method_gap(sys3, 0.5, v3, grid)
    d1 = semigroup.semigroup_defect(sys1, 0.25, 0.25, grid)
    d2 = semigroup.semigroup_defect(sys1, 0.25, 0.25, GridSpec(400, 5e-4))
    halves = d2 <= max(0.65 * d1, 1e-9)  # noise floor: both sit at rounding here
    _report(
        6,
        "Volterra vs method-of-steps",
        gap1 < 1e-4 and gap3 < 1e-4 and d1 <= 5e-3 and halves,
        f"heads {gap1:.1e}/{gap3:.1e} defect {d1:.1e}->{d2:.1e}",
    )


def test_07_adjoint_pairing():
    from delayadm.cli import _smooth_admissible_pair

    sys1 = scalar_system(0.0, 1.0)
    worst = {}
    for m in (100, 200, 400):
        rng = np.random.default_rng(99)
        worst[m] = max(
            adjoint.pairing_defect(sys1, GridSpec(m), *_smooth_admissible_pair(rng, 1, m))
            for _ in range(100)
        )
    order = np.log2(worst[100] / worst[400]) / 2.0
    rng = np.random.default_rng(1)
    vz = LiftedState(rng.standard_normal(1) + 1j, HistorySegment.zeros(200, 1))
    wz = LiftedState(rng.standard_normal(1) - 1j, HistorySegment.zeros(200, 1))
    zero_defect = adjoint.pairing_defect(sys1, GridSpec(200), vz, wz, check_preconditions=False)
    _report(
        7,
        "adjoint pairing defect",
        worst[200] <= 1e-2 and order >= 1.0 and zero_defect <= 1e-12,
        f"max={worst[200]:.2e} order={order:.2f} zero-tail={zero_defect:.1e}",
    )


def test_08_characteristic_root():
    lam = 0.5
    for _ in range(60):
        lam -= (lam - np.exp(-lam)) / (1.0 + np.exp(-lam))
    gen = adjoint.assemble_generator(scalar_system(0.0, 1.0), GridSpec(200))
    eig = adjoint.nearest_eigenvalue(gen, 0.5)
    dist = abs(eig - lam)
    _report(
        8,
        "characteristic root (Omega constant)",
        dist <= 1e-2,
        f"eig={eig.real:.5f} newton={lam:.5f} dist={dist:.2e}",
    )


def test_09_resolvent_crosscheck_and_weiss():
    start = time.perf_counter()
    grid = GridSpec(200)
    sysd = DelaySystem(
        np.array([[-0.5]]), ((np.array([[0.4]]), 1.0),), np.array([[1.0]])
    )
    lams = [
        0.3, 0.8, 1.0, 1.5, 2.0, 3.0,
        1.0 + 1.0j, 0.5 + 2.0j, 2.0 + 1.0j, 1.5 - 0.5j, 1.2 + 0.3j, 2.5 - 1.5j,
    ]
    worst_rel = 0.0
    for lam in lams:
        a = adm.resolvent_norm_analytic(sysd, lam, 0.0).norm
        d = adm.resolvent_norm_discrete(sysd, lam, grid, 0.0).norm
        worst_rel = max(worst_rel, abs(a - d) / a)
    res = adm.weiss_constant(
        scalar_system(-1.0, 0.0, b=1.0), 0.0, adm.SweepRegion.default(0.0)
    )
    elapsed = time.perf_counter() - start
    _report(
        9,
        "resolvent cross-check + Weiss sweep",
        worst_rel <= 0.01 and abs(res.c_est - 0.61) <= 0.01 and elapsed < 60.0,
        f"worst rel gap={worst_rel:.3%} C_est={res.c_est:.4f} runtime={elapsed:.1f}s",
    )


def test_10_direct_admissibility_constant():
    grid = GridSpec(200)
    sys0 = scalar_system(-1.0, 0.0, b=1.0)
    _, c_head = adm.finite_time_constant(sys0, 1.0, grid)
    oracle = np.sqrt((1.0 - np.exp(-2.0)) / 2.0)
    rel = abs(c_head - oracle) / oracle
    g50 = GridSpec(50)
    c_fulls = [adm.finite_time_constant(sys0, tau, g50)[0] for tau in (3.0, 4.0, 5.0)]
    spread = (max(c_fulls) - min(c_fulls)) / max(c_fulls)
    _report(
        10,
        "finite-time admissibility constants",
        rel <= 0.01 and spread <= 0.05,
        f"c_head rel-err={rel:.3%} tau-spread={spread:.3%}",
    )


def test_11_log_concave_envelope():
    rng = np.random.default_rng(77)
    ok = True
    for _ in range(5):
        ts = np.unique(np.concatenate([[0.0, 1.0], np.sort(rng.uniform(0, 1, 20))]))
        norms = np.exp(rng.standard_normal(ts.size) * 0.4)
        env = bounds.log_concave_envelope(ts, norms)
        logs, loge = np.log(norms), np.log(env)
        oracle = logs.copy()
        for k in range(ts.size):
            for i in range(k + 1):
                for j in range(k, ts.size):
                    if ts[j] == ts[i]:
                        continue
                    th = (ts[k] - ts[i]) / (ts[j] - ts[i])
                    oracle[k] = max(oracle[k], (1 - th) * logs[i] + th * logs[j])
        ok = ok and np.allclose(loge, oracle, atol=1e-10)
        ok = ok and np.all(env >= norms - 1e-12)
        slopes = np.diff(loge) / np.diff(ts)
        ok = ok and np.all(np.diff(slopes) <= 1e-9)
    _report(11, "log-concave envelope vs chord oracle", ok)


def test_12_population_demo():
    start = time.perf_counter()
    s_max = 5.0
    # decay: mu = 1, no births, no delay, pulse away from the outflow edge
    n = 400
    cfg = population.PopulationConfig(
        population.coefficient_profile("constant", n, s_max, value=1.0),
        population.coefficient_profile("constant", n, s_max, value=0.0),
        population.coefficient_profile("constant", n, s_max, value=0.0),
        s_max,
        n,
        population.coefficient_profile("gaussian", n, s_max, center=1.5, width=0.3)[1:],
    )
    _, summary = population.run_population_demo(cfg, 1.0, GridSpec(80))
    decay_rel = abs(summary.totals[-1] / summary.totals[0] - np.exp(-1.0)) / np.exp(-1.0)

    # positivity under nu >= 0 with births and delay, CFL <= 1
    n2 = 200
    cfg2 = population.PopulationConfig(
        population.coefficient_profile("constant", n2, s_max, value=1.0),
        population.coefficient_profile("constant", n2, s_max, value=0.2),
        population.coefficient_profile("gaussian", n2, s_max, center=1.0, width=0.5, scale=0.3),
        s_max,
        n2,
        population.coefficient_profile("gaussian", n2, s_max, center=1.5, width=0.3)[1:],
    )
    _, summary2 = population.run_population_demo(cfg2, 2.0, GridSpec(80))

    residuals = []
    for nn in (100, 200, 400):
        cfgn = population.PopulationConfig(
            population.coefficient_profile("constant", nn, s_max, value=1.0),
            population.coefficient_profile("constant", nn, s_max, value=0.0),
            population.coefficient_profile("gaussian", nn, s_max, center=1.0, width=0.5, scale=0.3),
            s_max,
            nn,
            population.coefficient_profile("gaussian", nn, s_max, center=1.5, width=0.3)[1:],
        )
        _, s = population.run_population_demo(cfgn, 1.0, GridSpec(80))
        residuals.append(s.settled_residual)
    order = np.log2(residuals[0] / residuals[2]) / 2.0
    elapsed = time.perf_counter() - start
    _report(
        12,
        "population demo",
        decay_rel <= 0.02
        and summary2.min_value >= -1e-10
        and order >= 1.0
        and elapsed < 30.0,
        f"decay rel-err={decay_rel:.3%} min={summary2.min_value:.1e} "
        f"residual order={order:.2f} runtime={elapsed:.1f}s",
    )


def test_13_cli_determinism(tmp_path):
    import test_cli as golden_mod

    ok = True
    details = []
    for name, config in sorted(golden_mod.GOLDEN.items()):
        cfg_path = tmp_path / f"{name}.json"
        cfg_path.write_text(json.dumps(config))
        out1, out2 = tmp_path / f"{name}-a", tmp_path / f"{name}-b"
        c1 = cli.main([name, "--config", str(cfg_path), "--out", str(out1)])
        c2 = cli.main([name, "--config", str(cfg_path), "--out", str(out2)])
        ok = ok and c1 == c2 == 0
        for p in sorted(out1.iterdir()):
            if p.name == "run.json":  # carries wall-clock timings by design
                continue
            same = filecmp.cmp(p, out2 / p.name, shallow=False)
            ok = ok and same
            if not same:
                details.append(f"{name}/{p.name} differs")
    # exit-code contract: 1 on config error, 2 on failed check
    bad = dict(golden_mod.SCALAR_ORACLE, grid={"m": 200, "dt": 0.0003})
    bad_path = tmp_path / "bad.json"
    bad_path.write_text(json.dumps(bad))
    ok = ok and cli.main(["simulate", "--config", str(bad_path), "--out", str(tmp_path / "e1")]) == 1
    tight = json.loads(json.dumps(golden_mod.ADJOINT_CHECK))
    tight["params"]["tolerance"] = 1e-9
    tight_path = tmp_path / "tight.json"
    tight_path.write_text(json.dumps(tight))
    ok = ok and cli.main(["adjoint-check", "--config", str(tight_path), "--out", str(tmp_path / "e2")]) == 2
    _report(13, "CLI determinism + exit codes", ok, " ".join(details))
