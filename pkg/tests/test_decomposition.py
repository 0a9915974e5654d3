import numpy as np
import pytest

from doflab import (
    Attribution,
    EstimatorConfig,
    GeneratorSpec,
    PredictorSpec,
    ScenarioGrid,
    ShiftSpec,
    dof_report,
    scenario_grid,
    shapley_attribution,
)
from doflab.estimator import EstimationError


def make_grid(df00, df01, df10, df11, n=100):
    return ScenarioGrid(df00=df00, df01=df01, df10=df10, df11=df11,
                        se00=0.0, se01=0.0, se10=0.0, se11=0.0, n=n)


def test_shapley_flat_grid_is_zero():
    attr = shapley_attribution(make_grid(1.0, 1.0, 1.0, 1.0))
    assert attr.phi_bias == 0.0 and attr.phi_cov == 0.0


def test_shapley_half_sum_example():
    attr = shapley_attribution(make_grid(2.0, 2.0, 5.0, 5.0))
    assert attr.phi_bias == pytest.approx(3.0, abs=1e-15)
    assert attr.phi_cov == pytest.approx(0.0, abs=1e-15)


def test_shapley_efficiency_is_bitwise_on_random_grids():
    rng = np.random.default_rng(0)
    for _ in range(200):
        g = make_grid(*rng.uniform(0, 99, size=4))
        attr = shapley_attribution(g)
        assert g.df11 - g.df00 - attr.phi_bias - attr.phi_cov == 0.0


def test_shapley_symmetry_under_source_swap():
    rng = np.random.default_rng(1)
    for _ in range(50):
        df00, df01, df10, df11 = rng.uniform(0, 50, size=4)
        attr = shapley_attribution(make_grid(df00, df01, df10, df11))
        swapped = shapley_attribution(make_grid(df00, df10, df01, df11))
        assert swapped.phi_bias == pytest.approx(attr.phi_cov, abs=1e-10)
        assert swapped.phi_cov == pytest.approx(attr.phi_bias, abs=1e-10)


def test_shift_spec_offset_forms():
    s = ShiftSpec(scale=2.0, offset=0.5)
    vec = s.offset_vector(4)
    assert np.allclose(vec, 0.25)  # 0.5/sqrt(4) broadcast
    assert np.linalg.norm(vec) == pytest.approx(0.5)
    s2 = ShiftSpec(scale=1.0, offset=(1.0, 2.0))
    assert np.array_equal(s2.offset_vector(2), [1.0, 2.0])
    with pytest.raises(ValueError):
        s2.offset_vector(3)
    with pytest.raises(ValueError):
        ShiftSpec(scale=0.0)


def test_identity_shift_collapses_grid():
    gen = GeneratorSpec("linear-ar1", n=60, p=20, rho=0.25, sigma=0.5)
    cfg = EstimatorConfig(n_reps=40, test_size=300, seed=1, sigma2=0.25)
    pred = PredictorSpec("ridge", lam=0.1)
    grid = scenario_grid(gen, pred, ShiftSpec(scale=1.0, offset=0.0), cfg)
    # identical draws on both sides: the shift axis vanishes exactly
    assert grid.df11 == grid.df10
    assert grid.df01 == grid.df00
    attr = shapley_attribution(grid)
    assert attr.phi_cov == 0.0


def test_null_signal_collapses_signal_axis():
    gen = GeneratorSpec("sparse-linear", n=60, p=12, s=1, alpha=0.0, sigma=1.0)
    cfg = EstimatorConfig(n_reps=150, test_size=500, seed=2, sigma2=1.0)
    pred = PredictorSpec("ridge", lam=0.2)
    grid = scenario_grid(gen, pred, ShiftSpec(), cfg)
    assert abs(grid.df11 - grid.df01) <= 3 * np.hypot(grid.se11, grid.se01)
    assert abs(grid.df10 - grid.df00) <= 3 * np.hypot(grid.se10, grid.se00)
    attr = shapley_attribution(grid)
    assert abs(attr.phi_bias) <= 3 * np.hypot(np.hypot(grid.se11, grid.se01),
                                              np.hypot(grid.se10, grid.se00))


def test_shift_and_bias_add_complexity_for_ridge():
    gen = GeneratorSpec("linear-ar1", n=80, p=40, rho=0.25, sigma=0.5)
    cfg = EstimatorConfig(n_reps=100, test_size=500, seed=3, sigma2=0.25)
    grid = scenario_grid(gen, PredictorSpec("ridge", lam=0.1), ShiftSpec(), cfg)
    assert grid.df11 >= grid.df00 - 3 * np.hypot(grid.se11, grid.se00)


def test_no_shift_recovers_df_due_to_bias():
    gen = GeneratorSpec("linear-ar1", n=60, p=30, rho=0.25, sigma=0.5)
    cfg = EstimatorConfig(n_reps=80, test_size=400, seed=4, sigma2=0.25)
    pred = PredictorSpec("ridge", lam=0.05)
    grid = scenario_grid(gen, pred, ShiftSpec(scale=1.0, offset=0.0), cfg)
    attr = shapley_attribution(grid)
    rep = dof_report(gen, pred, cfg)
    assert attr.phi_cov == 0.0
    assert abs(attr.phi_bias - rep.df_bias) <= 3 * np.hypot(
        np.hypot(grid.se11, grid.se00), rep.df_bias_se)


def test_scenario_grid_requires_sigma2_and_mean():
    gen = GeneratorSpec("linear-ar1", n=20, p=4, rho=0.0, sigma=1.0)
    with pytest.raises(EstimationError):
        scenario_grid(gen, PredictorSpec("ridge", lam=0.1), ShiftSpec(),
                      EstimatorConfig(n_reps=5, test_size=20, seed=0))
    rf = GeneratorSpec("random-features", n=20, p=4, latent_p=8, sigma=1.0)
    with pytest.raises(EstimationError):
        scenario_grid(rf, PredictorSpec("ridge", lam=0.1), ShiftSpec(),
                      EstimatorConfig(n_reps=5, test_size=20, seed=0, sigma2=1.0))
