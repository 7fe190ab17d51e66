import numpy as np
import pytest

from delayadm import population as pop
from delayadm.errors import ConfigError, DimensionError
from delayadm.system import GridSpec


def _config(n=100, s_max=5.0, mu=1.0, nu=0.0, beta=None, init_center=1.5, init_width=0.3):
    mu_arr = pop.coefficient_profile("constant", n, s_max, value=mu)
    nu_arr = pop.coefficient_profile("constant", n, s_max, value=nu)
    if beta is None:
        beta_arr = pop.coefficient_profile("constant", n, s_max, value=0.0)
    else:
        beta_arr = beta
    init = pop.coefficient_profile("gaussian", n, s_max, center=init_center, width=init_width)[1:]
    return pop.PopulationConfig(mu_arr, nu_arr, beta_arr, s_max, n, init)


def test_config_validation():
    with pytest.raises(ConfigError):
        _config(n=4)
    cfg = _config()
    with pytest.raises(ConfigError):
        pop.PopulationConfig(-cfg.mu - 1.0, cfg.nu, cfg.beta, cfg.s_max, cfg.n, cfg.initial)
    with pytest.raises(DimensionError):
        pop.PopulationConfig(cfg.mu[:-1], cfg.nu, cfg.beta, cfg.s_max, cfg.n, cfg.initial)


def test_pure_transport_conserves_until_outflow():
    # mu = beta = nu = 0: mass only leaves through the right boundary
    cfg = _config(mu=0.0)
    _, summary = pop.run_population_demo(cfg, 1.0, GridSpec(80))
    assert summary.totals[-1] <= summary.totals[0] + 1e-10
    assert summary.totals[-1] >= 0.98 * summary.totals[0]  # pulse far from s_max


def test_uniform_mortality_exponential_decay():
    cfg = _config(n=400, mu=1.0)
    _, summary = pop.run_population_demo(cfg, 1.0, GridSpec(80))
    ratio = summary.totals[-1] / summary.totals[0]
    assert abs(ratio - np.exp(-1.0)) <= 0.02 * np.exp(-1.0)


def test_subcritical_birth_keeps_contraction():
    n, s_max = 200, 5.0
    beta = pop.coefficient_profile("gaussian", n, s_max, center=1.0, width=0.5, scale=0.3)
    w = np.full(n + 1, s_max / n)
    w[0] = w[-1] = s_max / (2 * n)
    assert np.sum(w * beta) < 1.0
    cfg = _config(n=n, beta=beta)
    sys_pop = pop.build_population_system(cfg)
    assert sys_pop.omega0 <= 0.0


def test_positivity_with_delay():
    n = 200
    beta = pop.coefficient_profile("gaussian", n, 5.0, center=1.0, width=0.5, scale=0.3)
    cfg = pop.PopulationConfig(
        pop.coefficient_profile("constant", n, 5.0, value=1.0),
        pop.coefficient_profile("constant", n, 5.0, value=0.2),
        beta,
        5.0,
        n,
        pop.coefficient_profile("gaussian", n, 5.0, center=1.5, width=0.3)[1:],
    )
    _, summary = pop.run_population_demo(cfg, 2.0, GridSpec(80))
    assert summary.positivity_applicable
    assert summary.min_value >= -1e-10


def test_boundary_residual_refinement_order():
    s_max = 5.0
    residuals = []
    for n in (100, 200, 400):
        beta = pop.coefficient_profile("gaussian", n, s_max, center=1.0, width=0.5, scale=0.3)
        cfg = _config(n=n, beta=beta)
        _, summary = pop.run_population_demo(cfg, 1.0, GridSpec(80))
        residuals.append(summary.settled_residual)
    order = np.log2(residuals[0] / residuals[2]) / 2.0
    assert order >= 1.0


def test_zero_data_zero_trajectory():
    cfg = _config()
    cfg = pop.PopulationConfig(cfg.mu, cfg.nu, cfg.beta, cfg.s_max, cfg.n, np.zeros(cfg.n))
    traj, summary = pop.run_population_demo(cfg, 0.5, GridSpec(40))
    assert np.all(traj.samples == 0)
    assert np.all(summary.totals == 0)


def test_nu_zero_reduces_to_undelayed():
    cfg = _config(n=50)
    sys_pop = pop.build_population_system(cfg)
    assert all(np.all(Ak == 0) for Ak, _ in sys_pop.delays)


def test_cfl_guard():
    cfg = _config(n=400)  # ds = 0.0125
    with pytest.raises(ConfigError):
        pop.run_population_demo(cfg, 0.5, GridSpec(20))  # dt = 0.025 > ds


def test_input_band_column():
    cfg = _config(n=50)
    cfg = pop.PopulationConfig(
        cfg.mu, cfg.nu, cfg.beta, cfg.s_max, cfg.n, cfg.initial, input_band=(1.0, 2.0)
    )
    sys_pop = pop.build_population_system(cfg)
    ages = cfg.ages
    expected = ((ages >= 1.0) & (ages <= 2.0)).astype(complex)
    assert np.array_equal(sys_pop.B[:, 0], expected)
