"""Deterministic proportional-asymptotics equivalents of degrees of freedom.

Two solver lanes, each in its native scaling convention:

* Spectral lane (ridge, ridgeless): unit-variance features X = Z Sigma^(1/2)
  and the per-sample objective (1/n)|y - Xb|^2 + lam |b|_2^2. The effective
  regularization mu solves mu = lam + gamma * mu * avg[s/(s+mu)] over the
  spectrum of Sigma, and the variance/bias/deflation terms V, B, D chain into
  normalized df values through the optimism-matching map.

* Scalar lane (lasso, lassoless, general convex penalty): features with iid
  N(0, 1/n) entries and the objective (1/2)|y - Xb|^2 + lam * sum g(b_i).
  The pair (tau, a) solves
      tau^2 = sigma^2 + gamma E[(prox(B + tau H; a tau) - B)^2]
      lam   = a tau (1 - gamma E[prox'(B + tau H; a tau)])
  with B from the signal law and H standard normal; mu = a * tau. Intrinsic
  quantities use the solution with the signal law replaced by a point mass
  at zero, so they never depend on the signal.

Callers comparing the two lanes own the convention conversion (signal energy
|beta|^2 in the spectral lane corresponds to gamma * E[B^2] in the scalar
lane).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .matching import match_df_fraction, match_df_fraction_inverse

__all__ = [
    "ConvexEquivalents",
    "L1_PENALTY",
    "L2_PENALTY",
    "PenaltyLaw",
    "RidgeSolution",
    "ScalarSystemSolution",
    "SignalLaw",
    "SpectralAtom",
    "SpectralModel",
    "convex_equivalents",
    "gaussian_prox_moments",
    "gcv_consistency_check",
    "isotropic_model",
    "lasso_equivalents",
    "lassoless_equivalents",
    "mu_min",
    "ridge_equivalents",
    "ridgeless_equivalents",
    "soft_threshold",
    "soft_threshold_prime",
    "solve_lasso_system",
    "solve_lassoless_system",
    "solve_ridge_mu",
    "solve_ridgeless_mu",
    "spectral_from_ar1",
]

_RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    """A fixed-point solver failed to bracket or converge."""


def _phi(x):
    return np.exp(-0.5 * np.asarray(x, dtype=float) ** 2) / np.sqrt(2.0 * np.pi)


# ---------------------------------------------------------------------------
# proximal operators and Gaussian moments


def soft_threshold(u, t):
    """Soft threshold: shrink u toward zero by t, zeroing |u| <= t."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be >= 0")
    u = np.asarray(u, dtype=float)
    out = np.sign(u) * np.maximum(np.abs(u) - t, 0.0)
    return float(out) if out.ndim == 0 else out


def soft_threshold_prime(u, t):
    """Almost-everywhere derivative of the soft threshold in its first argument."""
    u = np.asarray(u, dtype=float)
    out = (np.abs(u) > t).astype(float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PenaltyLaw:
    """Separable convex penalty, represented by its proximal operator.

    prox(x, t) minimizes (x-z)^2/(2t) + g(z); prox_prime is its derivative in
    x, taken almost everywhere at kinks. kind selects closed-form Gaussian
    moments ("l1", "l2"); anything else integrates by adaptive
    Gauss-Hermite quadrature.
    """

    prox: Callable
    prox_prime: Callable
    kind: str = "custom"


L1_PENALTY = PenaltyLaw(soft_threshold, soft_threshold_prime, kind="l1")
L2_PENALTY = PenaltyLaw(
    prox=lambda x, t: np.asarray(x, dtype=float) / (1.0 + t),
    prox_prime=lambda x, t: np.full_like(np.asarray(x, dtype=float), 1.0 / (1.0 + t)),
    kind="l2",
)


@dataclass(frozen=True)
class SignalLaw:
    """Finite point-mass mixture for the coefficient distribution."""

    locations: tuple
    probabilities: tuple

    def __post_init__(self):
        if len(self.locations) != len(self.probabilities) or not self.locations:
            raise ValueError("locations and probabilities must align and be nonempty")
        probs = np.asarray(self.probabilities, dtype=float)
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be nonnegative and sum to 1")

    @classmethod
    def point_mass(cls, loc: float = 0.0) -> "SignalLaw":
        return cls((float(loc),), (1.0,))

    @classmethod
    def bernoulli(cls, delta: float, amplitude: float) -> "SignalLaw":
        """amplitude with probability delta, zero otherwise."""
        if not 0.0 < delta <= 1.0:
            raise ValueError("delta must be in (0, 1]")
        if delta == 1.0:
            return cls.point_mass(amplitude)
        return cls((float(amplitude), 0.0), (float(delta), 1.0 - float(delta)))

    @property
    def is_null(self) -> bool:
        return all(loc == 0.0 or prob == 0.0
                   for loc, prob in zip(self.locations, self.probabilities))

    def second_moment(self) -> float:
        return float(sum(p * loc**2 for loc, p in zip(self.locations, self.probabilities)))


NULL_SIGNAL = SignalLaw.point_mass(0.0)


def _l1_moments(b: float, tau: float, kappa: float) -> tuple[float, float]:
    # Exact truncated-normal evaluation of the soft-threshold moments.
    c1 = (kappa - b) / tau
    c2 = (kappa + b) / tau
    t1 = float(ndtr(-c1))
    t2 = float(ndtr(-c2))
    m1 = t1 + t2
    p1 = float(_phi(c1))
    p2 = float(_phi(c2))
    up = tau**2 * (t1 + c1 * p1) - 2.0 * tau * kappa * p1 + kappa**2 * t1
    down = tau**2 * (t2 + c2 * p2) - 2.0 * tau * kappa * p2 + kappa**2 * t2
    m2 = up + down + b**2 * max(1.0 - m1, 0.0)
    return m2, m1


@lru_cache(maxsize=8)
def _gh_rule(n: int):
    x, w = np.polynomial.hermite.hermgauss(n)
    return np.sqrt(2.0) * x, w / np.sqrt(np.pi)


def _quadrature_moments(penalty: PenaltyLaw, b: float, tau: float, kappa: float):
    # E[prox'] via Stein's identity E[(prox(b+tau H)-b) H]/tau, which keeps
    # the integrand continuous even when prox' jumps.
    prev = None
    for nodes in (64, 128, 256, 512, 1024):
        h, w = _gh_rule(nodes)
        d = np.asarray(penalty.prox(b + tau * h, kappa), dtype=float) - b
        m2 = float(w @ d**2)
        m1 = float(w @ (d * h)) / tau
        if prev is not None:
            if (abs(m2 - prev[0]) <= 1e-10 * max(1.0, abs(m2))
                    and abs(m1 - prev[1]) <= 1e-10 * max(1.0, abs(m1))):
                return m2, m1
        prev = (m2, m1)
    raise SolverError("Gauss-Hermite quadrature did not stabilize at 1e-10")


def gaussian_prox_moments(b: float, tau: float, kappa: float,
                          penalty: PenaltyLaw = L1_PENALTY) -> tuple[float, float]:
    """Moments (m2, m1) of the proximal map under a Gaussian perturbation.

    m2 = E[(prox(b + tau H; kappa) - b)^2], m1 = E[prox'(b + tau H; kappa)],
    with H standard normal. Soft-threshold and scaled-identity proxes use
    exact truncated-normal formulas; other penalties are integrated by
    Gauss-Hermite with node doubling until 1e-10 agreement.
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    if penalty.kind == "l1":
        return _l1_moments(b, tau, kappa)
    if penalty.kind == "l2":
        return (tau**2 + kappa**2 * b**2) / (1.0 + kappa) ** 2, 1.0 / (1.0 + kappa)
    return _quadrature_moments(penalty, b, tau, kappa)


def _law_moments(law: SignalLaw, penalty: PenaltyLaw, tau: float, kappa: float):
    m2 = m1 = 0.0
    for loc, prob in zip(law.locations, law.probabilities):
        if prob == 0.0:
            continue
        mm2, mm1 = gaussian_prox_moments(loc, tau, kappa, penalty)
        m2 += prob * mm2
        m1 += prob * mm1
    return m2, m1


# ---------------------------------------------------------------------------
# spectral lane: ridge and ridgeless


@dataclass(frozen=True)
class SpectralAtom:
    eigenvalue: float
    mass: float
    signal_energy: float = 0.0


@dataclass(frozen=True)
class SpectralModel:
    """Discrete spectrum of the feature covariance plus problem scalars.

    signal_energy of an atom is the squared signal mass projected on that
    eigen-block (the atom energies sum to |beta|^2); sigma2_nl is the
    variance of the nonlinear response component.
    """

    atoms: tuple
    gamma: float
    sigma2: float = 1.0
    sigma2_nl: float = 0.0

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("need at least one spectral atom")
        masses = np.array([a.mass for a in self.atoms])
        eigs = np.array([a.eigenvalue for a in self.atoms])
        if np.any(eigs <= 0):
            raise ValueError("eigenvalues must be positive")
        if np.any(masses < 0) or abs(masses.sum() - 1.0) > 1e-8:
            raise ValueError("masses must be nonnegative and sum to 1")
        if any(a.signal_energy < 0 for a in self.atoms):
            raise ValueError("signal energies must be nonnegative")
        if self.gamma <= 0 or self.sigma2 <= 0 or self.sigma2_nl < 0:
            raise ValueError("need gamma > 0, sigma2 > 0, sigma2_nl >= 0")

    def _arrays(self):
        s = np.array([a.eigenvalue for a in self.atoms])
        m = np.array([a.mass for a in self.atoms])
        e = np.array([a.signal_energy for a in self.atoms])
        return s, m, e

    def trace_resolvent(self, mu: float) -> float:
        """Normalized trace of Sigma (Sigma + mu I)^-1."""
        s, m, _ = self._arrays()
        return float(np.sum(m * s / (s + mu)))

    def trace_resolvent_sq(self, mu: float) -> float:
        """Normalized trace of Sigma^2 (Sigma + mu I)^-2."""
        s, m, _ = self._arrays()
        return float(np.sum(m * (s / (s + mu)) ** 2))

    def bias_form(self, mu: float) -> float:
        """beta' (Sigma + mu I)^-1 Sigma (Sigma + mu I)^-1 beta."""
        s, _, e = self._arrays()
        return float(np.sum(e * s / (s + mu) ** 2))

    @property
    def min_eigenvalue(self) -> float:
        return min(a.eigenvalue for a in self.atoms)


def isotropic_model(gamma: float, sigma2: float = 1.0, signal_energy: float = 0.0,
                    sigma2_nl: float = 0.0) -> SpectralModel:
    return SpectralModel(
        atoms=(SpectralAtom(1.0, 1.0, signal_energy),),
        gamma=gamma, sigma2=sigma2, sigma2_nl=sigma2_nl,
    )


def spectral_from_ar1(p: int, rho: float, gamma: float, sigma2: float,
                      signal_energy: float = 1.0,
                      include_nonlinear: bool = False) -> SpectralModel:
    """Exact p-point spectrum of the AR(1) covariance.

    Signal energy is spread uniformly over eigendirections (the average for a
    sphere-uniform coefficient vector); the nonlinear-model quadratic term
    has variance 2 tr(Sigma^2)/p^2.
    """
    from .data import ar1_covariance

    eigs = np.linalg.eigvalsh(ar1_covariance(p, rho))
    atoms = tuple(SpectralAtom(float(s), 1.0 / p, signal_energy / p) for s in eigs)
    sigma2_nl = 2.0 * float(np.sum(eigs**2)) / p**2 if include_nonlinear else 0.0
    return SpectralModel(atoms=atoms, gamma=gamma, sigma2=sigma2, sigma2_nl=sigma2_nl)


def _brentq(f, lo, hi):
    return float(brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200))


def solve_ridge_mu(lam: float, model: SpectralModel) -> float:
    """Effective regularization: mu = lam + gamma mu avg[s/(s+mu)], mu >= lam."""
    if lam <= 0:
        raise ValueError("lam must be > 0 (ridgeless has its own solver)")
    gamma = model.gamma

    def h(mu):
        return lam / mu + gamma * model.trace_resolvent(mu) - 1.0

    hi = max(lam, 1.0)
    for _ in range(200):
        if h(hi) < 0:
            break
        hi *= 2.0
    else:
        raise SolverError("failed to bracket the ridge fixed point")
    mu = _brentq(h, min(lam, hi) * 1e-3, hi)
    resid = abs(mu - lam - gamma * mu * model.trace_resolvent(mu))
    if resid > 1e-12 * max(mu, 1.0):
        raise SolverError(f"ridge fixed point residual {resid:.2e}")
    return mu


def solve_ridgeless_mu(model: SpectralModel) -> float:
    """Root of 1 = gamma avg[s/(s+mu)]; defined for gamma > 1."""
    gamma = model.gamma
    if gamma <= 1:
        raise ValueError("ridgeless fixed point needs gamma > 1")

    def h(mu):
        return gamma * model.trace_resolvent(mu) - 1.0

    lo = model.min_eigenvalue * 1e-12
    hi = 1.0
    for _ in range(200):
        if h(hi) < 0:
            break
        hi *= 2.0
    else:
        raise SolverError("failed to bracket the ridgeless fixed point")
    mu = _brentq(h, lo, hi)
    resid = abs(1.0 - gamma * model.trace_resolvent(mu))
    if resid > 1e-12:
        raise SolverError(f"ridgeless fixed point residual {resid:.2e}")
    return mu


@dataclass(frozen=True)
class RidgeSolution:
    """Converged spectral-lane equivalents on the normalized df scale."""

    mu: float
    V: float
    B: float
    D: float
    df_fixed_norm: float
    df_intrinsic_norm: float
    df_emergent_norm: float
    diverged: bool = False


def _spectral_solution(model: SpectralModel, lam: float, mu: float) -> RidgeSolution:
    V = model.gamma * model.trace_resolvent_sq(mu)
    D = 1.0 - V
    B = mu**2 * model.bias_form(mu) / model.sigma2
    factor = 1.0 - (lam / mu) ** 2
    if D <= 1e-12:
        return RidgeSolution(mu, V, B, D, 1.0 - lam / mu, 1.0, 1.0, diverged=True)
    nl = 1.0 + model.sigma2_nl / model.sigma2
    intrinsic = match_df_fraction(factor * (V / D + 1.0))
    emergent = match_df_fraction(factor * (B / D + (V / D + 1.0) * nl))
    return RidgeSolution(mu, V, B, D, 1.0 - lam / mu, intrinsic, emergent)


def ridge_equivalents(lam: float, model: SpectralModel) -> RidgeSolution:
    """Normalized fixed-X, intrinsic, and emergent df equivalents for ridge."""
    return _spectral_solution(model, lam, solve_ridge_mu(lam, model))


def ridgeless_equivalents(model: SpectralModel) -> RidgeSolution:
    """Piecewise equivalents for min-norm least squares across gamma = 1."""
    gamma = model.gamma
    if abs(gamma - 1.0) < 1e-12:
        # divergence point: optimism blows up, normalized df saturates
        return RidgeSolution(0.0, np.nan, np.nan, 0.0, 1.0, 1.0, 1.0, diverged=True)
    if gamma < 1.0:
        nl = 1.0 + model.sigma2_nl / model.sigma2
        emergent = match_df_fraction((gamma + gamma / (1.0 - gamma)) * nl)
        return RidgeSolution(0.0, np.nan, np.nan, np.nan, gamma, gamma, emergent)
    return _spectral_solution(model, 0.0, solve_ridgeless_mu(model))


def mu_min(model: SpectralModel) -> float:
    """Regularization at which the deflation factor D vanishes.

    Unique root of 1 = gamma avg[s^2/(s+mu)^2] above -min eigenvalue; can be
    negative, marking how far lam may be pushed before random-X optimism
    diverges.
    """
    gamma = model.gamma
    r_min = model.min_eigenvalue

    def q(mu):
        return gamma * model.trace_resolvent_sq(mu) - 1.0

    lo = -r_min * (1.0 - 1e-12)
    if q(lo) <= 0:
        raise SolverError("no sign change for the deflation root")
    hi = max(1.0, r_min)
    for _ in range(200):
        if q(hi) < 0:
            break
        hi *= 2.0
    else:
        raise SolverError("failed to bracket the deflation root")
    return _brentq(q, lo, hi)


# ---------------------------------------------------------------------------
# scalar lane: lasso, lassoless, general convex penalties


@dataclass(frozen=True)
class ScalarSystemSolution:
    """Solution of the scalar fixed-point system in (tau, a) coordinates."""

    tau: float
    a: float
    mu: float
    converged: bool
    residuals: tuple

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")


class _TauDiverged(Exception):
    pass


def _solve_tau(a: float, law: SignalLaw, penalty: PenaltyLaw, gamma: float,
               sigma2: float) -> float:
    """Inner solve of tau^2 = sigma2 + gamma E[m2] at fixed a.

    The normalized right-hand side is decreasing in tau; raises _TauDiverged
    when no finite solution exists (a at or below the existence boundary).
    """
    lo = np.sqrt(sigma2)

    def g(tau):
        m2, _ = _law_moments(law, penalty, tau, a * tau)
        return (sigma2 + gamma * m2) / tau**2 - 1.0

    if g(lo) <= 0:
        return lo
    hi = 2.0 * lo
    for _ in range(60):
        if g(hi) < 0:
            return _brentq(g, lo, hi)
        lo, hi = hi, hi * 2.0
    raise _TauDiverged


def _scalar_residuals(a, tau, lam, law, penalty, gamma, sigma2, lassoless):
    m2, m1 = _law_moments(law, penalty, tau, a * tau)
    r_tau = abs(tau**2 - sigma2 - gamma * m2) / max(1.0, tau**2)
    if lassoless:
        r_mu = abs(1.0 - gamma * m1)
    else:
        r_mu = abs(lam - a * tau * (1.0 - gamma * m1)) / max(1.0, lam)
    return r_tau, r_mu


def _bisect_on_a(predicate_below, a_hi_start=1.0):
    """Find the a where predicate_below flips from True to False."""
    hi = a_hi_start
    for _ in range(200):
        if not predicate_below(hi):
            break
        hi *= 2.0
    else:
        raise SolverError("failed to bracket the threshold parameter a")
    lo = 0.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if predicate_below(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def solve_lasso_system(lam: float, gamma: float, law: SignalLaw, sigma2: float,
                       penalty: PenaltyLaw = L1_PENALTY) -> ScalarSystemSolution:
    """Solve the penalized-regression scalar system at penalty level lam > 0.

    Nested bisection: the inner tau equation is monotone at fixed a, and the
    recovered penalty a tau (1 - gamma E[prox']) is increasing in a.
    """
    if lam <= 0:
        raise ValueError("lam must be > 0 (see solve_lassoless_system)")
    if gamma <= 0 or sigma2 <= 0:
        raise ValueError("need gamma > 0 and sigma2 > 0")

    def below(a):
        if a == 0.0:
            return True
        try:
            tau = _solve_tau(a, law, penalty, gamma, sigma2)
        except _TauDiverged:
            return True
        _, m1 = _law_moments(law, penalty, tau, a * tau)
        return a * tau * (1.0 - gamma * m1) < lam

    a = _bisect_on_a(below)
    tau = _solve_tau(a, law, penalty, gamma, sigma2)
    residuals = _scalar_residuals(a, tau, lam, law, penalty, gamma, sigma2, lassoless=False)
    return ScalarSystemSolution(
        tau=tau, a=a, mu=a * tau,
        converged=max(residuals) <= _RESIDUAL_TOL,
        residuals=residuals,
    )


def solve_lassoless_system(gamma: float, law: SignalLaw, sigma2: float,
                           penalty: PenaltyLaw = L1_PENALTY) -> ScalarSystemSolution:
    """Penalty-free limit of the scalar system; requires gamma > 1.

    For the null signal law with the l1 penalty the solution is closed form:
    a0 = Phi^-1((2 gamma - 1)/(2 gamma)) and tau0^2 = sigma2/(1 - gamma m2(a0)).
    """
    if gamma <= 1:
        raise ValueError("lassoless system needs gamma > 1")
    if penalty.kind == "l1" and law.is_null:
        a = float(ndtri((2.0 * gamma - 1.0) / (2.0 * gamma)))
        m2_unit, _ = _l1_moments(0.0, 1.0, a)
        tau = float(np.sqrt(sigma2 / (1.0 - gamma * m2_unit)))
        residuals = _scalar_residuals(a, tau, 0.0, law, penalty, gamma, sigma2, lassoless=True)
        return ScalarSystemSolution(tau=tau, a=a, mu=a * tau,
                                    converged=max(residuals) <= _RESIDUAL_TOL,
                                    residuals=residuals)

    def below(a):
        if a == 0.0:
            return True
        try:
            tau = _solve_tau(a, law, penalty, gamma, sigma2)
        except _TauDiverged:
            return True
        _, m1 = _law_moments(law, penalty, tau, a * tau)
        return gamma * m1 > 1.0

    a = _bisect_on_a(below)
    tau = _solve_tau(a, law, penalty, gamma, sigma2)
    residuals = _scalar_residuals(a, tau, 0.0, law, penalty, gamma, sigma2, lassoless=True)
    return ScalarSystemSolution(tau=tau, a=a, mu=a * tau,
                                converged=max(residuals) <= _RESIDUAL_TOL,
                                residuals=residuals)


@dataclass(frozen=True)
class ConvexEquivalents:
    """Normalized df equivalents from the scalar lane (signal + null solves)."""

    lam: float
    gamma: float
    df_fixed_norm: float
    df_intrinsic_norm: float
    df_emergent_norm: float
    signal: ScalarSystemSolution
    null: ScalarSystemSolution


def convex_equivalents(lam: float, gamma: float, law: SignalLaw, sigma2: float,
                       penalty: PenaltyLaw = L1_PENALTY) -> ConvexEquivalents:
    """df equivalents for a convex separable penalty at level lam > 0.

    The intrinsic value reuses the null-signal solution (tau0, mu0) in both
    factors, so it is independent of the signal law, matching the defining
    pure-noise protocol.
    """
    signal = solve_lasso_system(lam, gamma, law, sigma2, penalty)
    null = signal if law.is_null else solve_lasso_system(lam, gamma, NULL_SIGNAL, sigma2, penalty)
    df_fixed = 1.0 - lam / signal.mu
    intrinsic = match_df_fraction((1.0 - (lam / null.mu) ** 2) * null.tau**2 / sigma2)
    emergent = match_df_fraction((1.0 - (lam / signal.mu) ** 2) * signal.tau**2 / sigma2)
    return ConvexEquivalents(lam, gamma, df_fixed, intrinsic, emergent, signal, null)


def lasso_equivalents(lam: float, gamma: float, law: SignalLaw,
                      sigma2: float) -> ConvexEquivalents:
    return convex_equivalents(lam, gamma, law, sigma2, L1_PENALTY)


def lassoless_equivalents(gamma: float, law: SignalLaw, sigma2: float,
                          penalty: PenaltyLaw = L1_PENALTY) -> ConvexEquivalents:
    """Piecewise df equivalents for the min-l1-norm interpolation limit."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if abs(gamma - 1.0) < 1e-12:
        sol = ScalarSystemSolution(tau=np.sqrt(sigma2), a=0.0, mu=0.0,
                                   converged=True, residuals=(0.0, 0.0))
        return ConvexEquivalents(0.0, gamma, 1.0, 1.0, 1.0, sol, sol)
    if gamma < 1.0:
        # least squares on well-specified data: all three equal gamma
        sol = ScalarSystemSolution(tau=np.sqrt(sigma2), a=0.0, mu=0.0,
                                   converged=True, residuals=(0.0, 0.0))
        return ConvexEquivalents(0.0, gamma, gamma, gamma, gamma, sol, sol)
    signal = solve_lassoless_system(gamma, law, sigma2, penalty)
    null = signal if law.is_null else solve_lassoless_system(gamma, NULL_SIGNAL, sigma2, penalty)
    intrinsic = match_df_fraction(null.tau**2 / sigma2)
    emergent = match_df_fraction(signal.tau**2 / sigma2)
    return ConvexEquivalents(0.0, gamma, 1.0, intrinsic, emergent, signal, null)


def gcv_consistency_check(lam: float, gamma: float, law: SignalLaw, sigma2: float,
                          penalty: PenaltyLaw = L1_PENALTY) -> float:
    """Residual of the training-error inflation identity behind the df map.

    The emergent df equivalent must invert back to the normalized optimism
    (1 - (lam/mu)^2) tau^2 / sigma2; returns the absolute gap.
    """
    eq = convex_equivalents(lam, gamma, law, sigma2, penalty)
    x = match_df_fraction_inverse(eq.df_emergent_norm)
    target = (1.0 - (lam / eq.signal.mu) ** 2) * eq.signal.tau**2 / sigma2
    return abs(x - target)
