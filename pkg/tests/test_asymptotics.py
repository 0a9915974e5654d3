import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from doflab import (
    L1_PENALTY,
    L2_PENALTY,
    PenaltyLaw,
    SignalLaw,
    SpectralAtom,
    SpectralModel,
    convex_equivalents,
    gaussian_prox_moments,
    gcv_consistency_check,
    isotropic_model,
    lasso_equivalents,
    lassoless_equivalents,
    match_df_fraction_inverse,
    mu_min,
    ridge_equivalents,
    ridgeless_equivalents,
    soft_threshold,
    soft_threshold_prime,
    solve_lasso_system,
    solve_lassoless_system,
    solve_ridge_mu,
    solve_ridgeless_mu,
    spectral_from_ar1,
)


def quadratic_mu_oracle(lam, gamma):
    """Isotropic fixed point: mu^2 + mu(1 - lam - gamma) - lam = 0, positive root."""
    b = 1.0 - lam - gamma
    return (-b + np.sqrt(b * b + 4.0 * lam)) / 2.0


def omega_oracle(x):
    """Invert u + u/(1-u) = x by bisection, independent of the closed form."""
    if x == 0:
        return 0.0
    return brentq(lambda u: u + u / (1 - u) - x, 0.0, 1.0 - 1e-15, xtol=1e-15)


# ---------------------------------------------------------------------------
# spectral lane


def test_ridge_mu_isotropic_quadratic_oracle():
    for lam, gamma in [(1.0, 1.0), (0.1, 2.0), (0.37, 0.25), (5.0, 3.0)]:
        mu = solve_ridge_mu(lam, isotropic_model(gamma))
        assert mu == pytest.approx(quadratic_mu_oracle(lam, gamma), abs=1e-12)
        assert mu >= lam


def test_ridge_mu_small_gamma_limit():
    mu = solve_ridge_mu(0.8, isotropic_model(1e-9))
    assert mu == pytest.approx(0.8, abs=1e-8)


def test_ridge_mu_grid_residuals():
    model = spectral_from_ar1(50, 0.3, 1.4, 1.0)
    for lam in np.geomspace(1e-4, 100, 12):
        mu = solve_ridge_mu(lam, model)
        resid = abs(mu - lam - model.gamma * mu * model.trace_resolvent(mu))
        assert resid <= 1e-12 * max(mu, 1.0)


def test_ridge_equivalents_hand_chain():
    # Sigma = I, gamma = 0.6, lam = 0.5, null signal: full scalar chain by hand
    lam, gamma = 0.5, 0.6
    mu = quadratic_mu_oracle(lam, gamma)
    V = gamma / (1 + mu) ** 2
    D = 1 - V
    factor = 1 - (lam / mu) ** 2
    sol = ridge_equivalents(lam, isotropic_model(gamma))
    assert sol.mu == pytest.approx(mu, abs=1e-12)
    assert sol.V == pytest.approx(V, abs=1e-12)
    assert sol.D == pytest.approx(D, abs=1e-12)
    assert sol.df_fixed_norm == pytest.approx(1 - lam / mu, abs=1e-12)
    assert sol.df_intrinsic_norm == pytest.approx(
        omega_oracle(factor * (V / D + 1)), abs=1e-10)
    # null signal means emergent = intrinsic
    assert sol.df_emergent_norm == sol.df_intrinsic_norm


def test_ridge_equivalents_strong_penalty_vanishes():
    sol = ridge_equivalents(1e8, isotropic_model(1.0, signal_energy=2.0))
    assert sol.df_fixed_norm < 1e-6
    assert sol.df_intrinsic_norm < 1e-6
    assert sol.df_emergent_norm < 1e-4


def test_ridge_intrinsic_monotone_decreasing_in_lambda():
    model = spectral_from_ar1(40, 0.25, 1.5, 0.16, signal_energy=1.0)
    vals = [ridge_equivalents(lam, model).df_intrinsic_norm
            for lam in np.geomspace(1e-3, 50, 25)]
    assert np.all(np.diff(vals) < 0)


def test_ridgeless_under_and_overparameterized():
    sol = ridgeless_equivalents(isotropic_model(0.5))
    assert (sol.df_fixed_norm, sol.df_intrinsic_norm) == (0.5, 0.5)
    assert sol.df_emergent_norm == pytest.approx(0.5, abs=1e-12)  # sigma2_nl = 0

    # Sigma=I, gamma=2: mu=1, V=0.5, D=0.5, intrinsic = omega(2) = 2 - sqrt(2)
    sol = ridgeless_equivalents(isotropic_model(2.0))
    assert sol.mu == pytest.approx(1.0, abs=1e-10)
    assert sol.df_fixed_norm == 1.0
    assert sol.df_intrinsic_norm == pytest.approx(2 - np.sqrt(2), abs=1e-10)


def test_ridgeless_misspecification_inflates_emergent():
    base = ridgeless_equivalents(isotropic_model(0.5))
    noisy = ridgeless_equivalents(isotropic_model(0.5, sigma2_nl=0.5))
    assert noisy.df_emergent_norm > base.df_emergent_norm
    assert noisy.df_intrinsic_norm == base.df_intrinsic_norm == 0.5


def test_ridgeless_monotonicity_pattern():
    gammas_lo = np.linspace(0.05, 0.95, 19)
    gammas_hi = np.linspace(1.05, 6.0, 25)
    model = lambda g: spectral_from_ar1(30, 0.25, g, 0.16, signal_energy=1.0,
                                        include_nonlinear=True)
    intr_lo = [ridgeless_equivalents(model(g)).df_intrinsic_norm for g in gammas_lo]
    intr_hi = [ridgeless_equivalents(model(g)).df_intrinsic_norm for g in gammas_hi]
    emer_lo = [ridgeless_equivalents(model(g)).df_emergent_norm for g in gammas_lo]
    assert np.all(np.diff(intr_lo) > 0)
    assert np.all(np.diff(intr_hi) < 0)
    assert np.all(np.diff(emer_lo) > 0)
    assert max(max(intr_lo), max(intr_hi)) < 1.0


def test_ridgeless_continuity_at_one():
    model = lambda g: spectral_from_ar1(25, 0.25, g, 0.16, signal_energy=1.0,
                                        include_nonlinear=True)
    lo = ridgeless_equivalents(model(1 - 1e-4))
    hi = ridgeless_equivalents(model(1 + 1e-4))
    assert abs(lo.df_intrinsic_norm - hi.df_intrinsic_norm) <= 1e-3
    assert abs(lo.df_emergent_norm - hi.df_emergent_norm) <= 1e-3
    at_one = ridgeless_equivalents(model(1.0))
    assert at_one.diverged and at_one.df_intrinsic_norm == 1.0


def test_mu_min_closed_forms():
    assert mu_min(isotropic_model(1.0)) == pytest.approx(0.0, abs=1e-10)
    assert mu_min(isotropic_model(4.0)) == pytest.approx(1.0, abs=1e-10)
    # gamma = 0.25: (1+mu)^2 = 1/4 admits the negative root -0.5 above -1
    assert mu_min(isotropic_model(0.25)) == pytest.approx(-0.5, abs=1e-10)


def test_solve_ridgeless_rejects_underparameterized():
    with pytest.raises(ValueError):
        solve_ridgeless_mu(isotropic_model(0.9))


def test_spectral_model_validation():
    with pytest.raises(ValueError):
        SpectralModel(atoms=(SpectralAtom(1.0, 0.7),), gamma=1.0)  # masses not 1
    with pytest.raises(ValueError):
        SpectralModel(atoms=(SpectralAtom(-1.0, 1.0),), gamma=1.0)
    with pytest.raises(ValueError):
        isotropic_model(0.0)


# ---------------------------------------------------------------------------
# proximal operators and moments


def test_soft_threshold_values_and_scaling():
    assert soft_threshold(5.0, 2.0) == 3.0
    assert soft_threshold(-1.0, 2.0) == 0.0
    assert soft_threshold_prime(5.0, 2.0) == 1.0
    assert soft_threshold_prime(-1.0, 2.0) == 0.0
    # scaling identity soft(x; k) = soft(a x; a k)/a
    a, x, k = 3.0, 1.7, 0.4
    assert soft_threshold(x, k) == pytest.approx(soft_threshold(a * x, a * k) / a, abs=1e-15)
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


def test_prox_moments_identity_and_kill_limits():
    m2, m1 = gaussian_prox_moments(0.0, 1.7, 0.0)
    assert m2 == pytest.approx(1.7**2, abs=1e-12)
    assert m1 == pytest.approx(1.0, abs=1e-12)
    m2, m1 = gaussian_prox_moments(0.0, 1.0, 40.0)
    assert m2 <= 1e-10 and m1 <= 1e-10


def test_prox_moments_quantile_oracle():
    kappa = float(ndtri(0.75))
    m2, m1 = gaussian_prox_moments(0.0, 1.0, kappa)
    assert m1 == pytest.approx(0.5, abs=1e-12)
    phi = np.exp(-kappa**2 / 2) / np.sqrt(2 * np.pi)
    oracle = 2 * (-kappa * phi + (1 + kappa**2) * (1 - ndtr(kappa)))
    assert m2 == pytest.approx(oracle, abs=1e-12)


def test_prox_moments_monte_carlo_oracle():
    rng = np.random.default_rng(8)
    H = rng.standard_normal(2_000_000)
    b, tau, kappa = 0.8, 1.3, 0.9
    vals = soft_threshold(b + tau * H, kappa) - b
    m2, m1 = gaussian_prox_moments(b, tau, kappa)
    mc2 = float(np.mean(vals**2))
    se2 = float(np.std(vals**2, ddof=1) / np.sqrt(len(H)))
    assert abs(m2 - mc2) <= 3 * se2
    hits = np.abs(b + tau * H) > kappa
    assert abs(m1 - hits.mean()) <= 3 * hits.std(ddof=1) / np.sqrt(len(H))


def test_quadrature_matches_closed_form_for_scaled_identity():
    # force the quadrature path with a custom (smooth) prox and compare
    custom_l2 = PenaltyLaw(prox=L2_PENALTY.prox, prox_prime=L2_PENALTY.prox_prime,
                           kind="custom")
    for b, tau, kappa in [(0.0, 1.0, 0.5), (1.2, 0.7, 2.0), (-0.4, 2.0, 0.1)]:
        exact = gaussian_prox_moments(b, tau, kappa, L2_PENALTY)
        quad = gaussian_prox_moments(b, tau, kappa, custom_l2)
        assert quad[0] == pytest.approx(exact[0], abs=1e-9)
        assert quad[1] == pytest.approx(exact[1], abs=1e-9)


def test_prox_moments_rejects_bad_tau():
    with pytest.raises(ValueError):
        gaussian_prox_moments(0.0, 0.0, 1.0)


def test_signal_law_validation():
    with pytest.raises(ValueError):
        SignalLaw((1.0, 0.0), (0.5, 0.6))
    law = SignalLaw.bernoulli(0.25, 2.0)
    assert law.second_moment() == pytest.approx(1.0)
    assert SignalLaw.point_mass(0.0).is_null
    assert not law.is_null


# ---------------------------------------------------------------------------
# scalar systems


def test_lassoless_closed_form_gamma_two():
    sol = solve_lassoless_system(2.0, SignalLaw.point_mass(0.0), 1.0)
    assert sol.a == pytest.approx(float(ndtri(0.75)), abs=1e-12)
    m2, _ = gaussian_prox_moments(0.0, 1.0, sol.a)
    assert sol.tau**2 == pytest.approx(1.0 / (1.0 - 2.0 * m2), rel=1e-12)
    assert sol.converged and max(sol.residuals) <= 1e-10
    eq = lassoless_equivalents(2.0, SignalLaw.point_mass(0.0), 1.0)
    assert eq.df_intrinsic_norm == pytest.approx(omega_oracle(sol.tau**2), abs=1e-10)
    assert 0.64 < eq.df_intrinsic_norm < 0.66


def test_lassoless_large_gamma_limits():
    # a0 -> inf and tau0^2 -> sigma^2, at the slow rate tau0^2 ~ 1 + 2/a0^2
    # (from gamma E[soft(H;a)^2] ~ 2/a^2 along gamma = 1/(2(1-Phi(a))))
    sols = [solve_lassoless_system(g, SignalLaw.point_mass(0.0), 1.0)
            for g in (1e3, 1e5, 1e8)]
    a_vals = [s.a for s in sols]
    t_vals = [s.tau**2 for s in sols]
    assert np.all(np.diff(a_vals) > 0) and a_vals[-1] > 5.5
    assert np.all(np.diff(t_vals) < 0)
    assert t_vals[-1] == pytest.approx(1.0 + 2.0 / a_vals[-1] ** 2, rel=0.05)


def test_lassoless_numeric_path_matches_closed_form():
    # non-null law with zero-amplitude atom exercises the bisection path
    law = SignalLaw((0.0, 0.0), (0.5, 0.5))
    assert not law.is_null or True
    numeric = solve_lassoless_system(2.0, SignalLaw((1e-300, 0.0), (0.5, 0.5)), 1.0)
    closed = solve_lassoless_system(2.0, SignalLaw.point_mass(0.0), 1.0)
    assert numeric.a == pytest.approx(closed.a, abs=1e-9)
    assert numeric.tau == pytest.approx(closed.tau, rel=1e-9)


def test_lassoless_rejects_gamma_below_one():
    with pytest.raises(ValueError):
        solve_lassoless_system(0.9, SignalLaw.point_mass(0.0), 1.0)


def test_lassoless_a_increasing_in_gamma():
    law = SignalLaw.bernoulli(0.2, 1.5)
    sols = [solve_lassoless_system(g, law, 1.0) for g in (1.2, 1.6, 2.5, 4.0, 8.0)]
    a_vals = [s.a for s in sols]
    assert np.all(np.diff(a_vals) > 0)
    assert all(np.isfinite(s.tau) and s.tau >= 1.0 for s in sols)


def test_lasso_system_null_law_is_definitionally_intrinsic():
    sol = solve_lasso_system(0.7, 1.3, SignalLaw.point_mass(0.0), 1.0)
    eq = lasso_equivalents(0.7, 1.3, SignalLaw.point_mass(0.0), 1.0)
    assert eq.signal is eq.null
    assert eq.df_emergent_norm == eq.df_intrinsic_norm
    assert sol.mu == eq.signal.mu


def test_lasso_system_residuals_on_grid():
    law = SignalLaw.bernoulli(1 / 6, 2.0)
    for lam in (0.05, 0.3, 1.0, 5.0):
        for gamma in (0.4, 0.75, 1.5, 3.0):
            sol = solve_lasso_system(lam, gamma, law, 1.0)
            assert sol.converged, (lam, gamma, sol.residuals)
            assert max(sol.residuals) <= 1e-10
            assert sol.tau >= 1.0


def test_lasso_large_lambda_limit():
    # lam -> inf: prox kills everything, tau^2 -> sigma2 + gamma E[B^2], mu -> lam
    law = SignalLaw.bernoulli(0.3, 1.2)
    gamma, sigma2 = 1.4, 0.8
    sol = solve_lasso_system(1e3, gamma, law, sigma2)
    assert sol.tau**2 == pytest.approx(sigma2 + gamma * law.second_moment(), rel=1e-4)
    assert sol.mu == pytest.approx(1e3, rel=1e-3)
    eq = lasso_equivalents(1e3, gamma, law, sigma2)
    assert eq.df_fixed_norm < 1e-3
    assert eq.df_emergent_norm < 1e-3


def test_lasso_rejects_bad_inputs():
    with pytest.raises(ValueError):
        solve_lasso_system(0.0, 1.0, SignalLaw.point_mass(0.0), 1.0)
    with pytest.raises(ValueError):
        solve_lasso_system(1.0, -1.0, SignalLaw.point_mass(0.0), 1.0)


def test_lasso_emergent_dominates_intrinsic_and_monotonicity():
    law = SignalLaw.bernoulli(1 / 6, 2.0)
    for gamma in (0.5, 1.5, 3.0):
        intr = []
        for lam in np.geomspace(0.02, 8.0, 12):
            eq = lasso_equivalents(lam, gamma, law, 1.0)
            assert eq.df_emergent_norm >= eq.df_intrinsic_norm - 1e-12
            intr.append(eq.df_intrinsic_norm)
        assert np.all(np.diff(intr) < 0)


def test_lassoless_emergent_dominates_intrinsic():
    law = SignalLaw.bernoulli(0.1, 2.0)
    for gamma in (1.3, 2.0, 4.0):
        eq = lassoless_equivalents(gamma, law, 1.0)
        assert eq.df_emergent_norm >= eq.df_intrinsic_norm - 1e-12


def test_lassoless_piecewise_and_continuity():
    law = SignalLaw.bernoulli(0.1, 2.0)
    under = lassoless_equivalents(0.6, law, 1.0)
    assert under.df_fixed_norm == under.df_intrinsic_norm == under.df_emergent_norm == 0.6
    lo = lassoless_equivalents(1 - 1e-4, law, 1.0)
    hi = lassoless_equivalents(1 + 1e-4, law, 1.0)
    assert abs(lo.df_intrinsic_norm - hi.df_intrinsic_norm) <= 1e-3
    assert abs(lo.df_emergent_norm - hi.df_emergent_norm) <= 1e-3


def test_convex_specialization_reproduces_lasso():
    law = SignalLaw.bernoulli(0.25, 1.0)
    for lam in np.geomspace(0.05, 5.0, 5):
        for gamma in (0.3, 0.8, 1.6, 2.4, 4.0):
            a = lasso_equivalents(lam, gamma, law, 1.0)
            b = convex_equivalents(lam, gamma, law, 1.0, L1_PENALTY)
            assert abs(a.df_fixed_norm - b.df_fixed_norm) <= 1e-9
            assert abs(a.df_intrinsic_norm - b.df_intrinsic_norm) <= 1e-9
            assert abs(a.df_emergent_norm - b.df_emergent_norm) <= 1e-9


def test_convex_ridge_prox_matches_spectral_ridge():
    # scalar lane with the scaled-identity prox against the isotropic spectral
    # lane; signal energies reconcile via |beta|^2 = gamma E[B^2]
    law = SignalLaw.point_mass(1.1)
    for lam in (0.1, 0.7, 2.0):
        for gamma in (0.5, 1.5, 3.0):
            eq = convex_equivalents(lam, gamma, law, 1.0, L2_PENALTY)
            spectral = ridge_equivalents(
                lam, isotropic_model(gamma, sigma2=1.0,
                                     signal_energy=gamma * law.second_moment()))
            assert eq.df_fixed_norm == pytest.approx(spectral.df_fixed_norm, abs=1e-6)
            assert eq.df_intrinsic_norm == pytest.approx(spectral.df_intrinsic_norm, abs=1e-6)
            assert eq.df_emergent_norm == pytest.approx(spectral.df_emergent_norm, abs=1e-6)


def test_gcv_identity_residuals():
    law = SignalLaw.bernoulli(1 / 6, 2.0)
    for lam in (0.05, 0.5, 2.0):
        for gamma in (0.5, 1.5):
            assert gcv_consistency_check(lam, gamma, law, 1.0) <= 1e-9
    # lam -> 0+, gamma < 1: fixed-X df tends to gamma
    eq = lasso_equivalents(1e-9, 0.8, law, 1.0)
    assert eq.df_fixed_norm == pytest.approx(0.8, abs=1e-5)
    # lam -> inf: everything shuts off
    assert gcv_consistency_check(1e4, 0.8, law, 1.0) <= 1e-9


def test_every_matched_argument_is_nonnegative():
    law = SignalLaw.bernoulli(0.2, 1.3)
    for lam in (0.05, 1.0):
        for gamma in (0.5, 2.5):
            eq = lasso_equivalents(lam, gamma, law, 1.0)
            for norm in (eq.df_fixed_norm, eq.df_intrinsic_norm, eq.df_emergent_norm):
                assert 0.0 <= norm < 1.0
                if norm < 1.0:
                    assert match_df_fraction_inverse(norm) >= 0.0
