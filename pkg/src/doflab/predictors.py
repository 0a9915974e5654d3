"""Prediction models with a uniform fit/predict contract.

All models are fit without an intercept. Linear smoothers additionally expose
their weight function L_X, with the contract that predicting from weights
reproduces a refit on any alternative response (linearity in y).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .trees import RegressionTree, grow_tree

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None

__all__ = [
    "ConvergenceError",
    "FittedModel",
    "PredictorSpec",
    "SmootherWeights",
    "fit",
    "lasso_lambda_max",
    "smoother_weights",
]

FAMILIES = (
    "least-squares",
    "ridge",
    "ridgeless",
    "lasso",
    "lassoless",
    "knn",
    "tree",
    "forest",
    "random-features-ridgeless",
)

SMOOTHER_FAMILIES = ("least-squares", "ridge", "ridgeless", "knn", "random-features-ridgeless")


class ConvergenceError(RuntimeError):
    """A solver stopped before reaching its stationarity tolerance."""


@dataclass(frozen=True)
class PredictorSpec:
    """Family plus tuning parameters of one prediction model."""

    family: str
    lam: float | None = None
    k: int | None = None
    max_leaves: int | None = None
    n_trees: int | None = None
    split_features: int | None = None  # forest per-split subset; default ceil(p/3)
    out_features: int | None = None  # random-features-ridgeless map output dim
    latent_features: int | None = None  # ... and its expected input dim

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown predictor family {self.family!r}")
        if self.family == "ridge" and (self.lam is None or self.lam <= 0):
            raise ValueError("ridge requires lam > 0 (use ridgeless for lam = 0)")
        if self.family == "lasso" and (self.lam is None or self.lam <= 0):
            raise ValueError("lasso requires lam > 0 (use lassoless for lam = 0)")
        if self.family == "knn" and (self.k is None or self.k < 1):
            raise ValueError("knn requires k >= 1")
        if self.family in ("tree", "forest"):
            if self.max_leaves is None or self.max_leaves < 2:
                raise ValueError("trees require max_leaves >= 2")
        if self.family == "forest" and (self.n_trees is None or self.n_trees < 1):
            raise ValueError("forest requires n_trees >= 1")
        if self.family == "random-features-ridgeless":
            if self.out_features is None or self.out_features < 1:
                raise ValueError("random-features-ridgeless requires out_features >= 1")

    @property
    def is_smoother(self) -> bool:
        return self.family in SMOOTHER_FAMILIES

    def label(self) -> str:
        if self.family in ("ridge", "lasso"):
            extras = f"lam={self.lam:g}"
        elif self.family == "knn":
            extras = f"k={self.k}"
        elif self.family == "tree":
            extras = f"max_leaves={self.max_leaves}"
        elif self.family == "forest":
            extras = f"n_trees={self.n_trees},max_leaves={self.max_leaves}"
        elif self.family == "random-features-ridgeless":
            extras = f"p={self.out_features}"
        else:
            return self.family
        return f"{self.family}({extras})"


@dataclass
class SmootherWeights:
    """Weight function of a linear smoother and its in-sample matrix."""

    weights: Callable[[np.ndarray], np.ndarray]  # (m, p) -> (m, n)
    in_sample: np.ndarray  # (n, n)


class FittedModel:
    """A trained predictor; predict is deterministic given the fitted state."""

    def __init__(self, spec: PredictorSpec):
        self.spec = spec

    def predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class _LinearModel(FittedModel):
    def __init__(self, spec, beta):
        super().__init__(spec)
        self.beta = beta

    def predict(self, X):
        return X @ self.beta


class _CoreSmootherModel(_LinearModel):
    """Linear model whose weights are L_X(x) = X_train @ (core @ x).

    The p x p core (a scaled gram inverse) is only materialized when weights
    are requested; plain fit/predict touches the Cholesky factor alone.
    """

    def __init__(self, spec, beta, X_train, chol, scale):
        super().__init__(spec, beta)
        self._X = X_train
        self._chol = chol
        self._scale = scale
        self._core_cache = None

    @property
    def _core(self):
        if self._core_cache is None:
            p = self._X.shape[1]
            self._core_cache = sla.cho_solve(self._chol, np.eye(p)) / self._scale
        return self._core_cache

    def coef_for(self, y):
        """Coefficients the same design would produce for another response."""
        return sla.cho_solve(self._chol, self._X.T @ y) / self._scale

    def weight_rows(self, X):
        return X @ self._core @ self._X.T

    def in_sample_weights(self):
        return self.weight_rows(self._X)

    def in_sample_trace(self):
        return float(np.sum(self._X * (self._X @ self._core)))


class _RidgelessModel(_LinearModel):
    def __init__(self, spec, beta, X_train, U, s_inv, Vt):
        super().__init__(spec, beta)
        self._X = X_train
        self._U = U
        self._s_inv = s_inv
        self._Vt = Vt

    @property
    def rank(self) -> int:
        return len(self._s_inv)

    def coef_for(self, y):
        return self._Vt.T @ (self._s_inv * (self._U.T @ y))

    def weight_rows(self, X):
        # L_X(x)' = x' V S^+ U'
        return (X @ self._Vt.T) * self._s_inv @ self._U.T

    def in_sample_weights(self):
        return self._U @ self._U.T

    def in_sample_trace(self):
        return float(self.rank)


class _KnnModel(FittedModel):
    def __init__(self, spec, X_train, y_train):
        super().__init__(spec)
        self._X = X_train
        self._y = y_train

    def _neighbor_indices(self, X):
        d2 = np.sum(X**2, axis=1)[:, None] - 2.0 * X @ self._X.T + np.sum(self._X**2, axis=1)[None, :]
        n = self._X.shape[0]
        # ties broken by lowest training index
        order = np.lexsort((np.broadcast_to(np.arange(n), d2.shape), d2), axis=1)
        return order[:, : self.spec.k]

    def predict(self, X):
        return self._y[self._neighbor_indices(X)].mean(axis=1)

    def weight_rows(self, X):
        m = X.shape[0]
        W = np.zeros((m, self._X.shape[0]))
        rows = np.repeat(np.arange(m), self.spec.k)
        W[rows, self._neighbor_indices(X).ravel()] = 1.0 / self.spec.k
        return W

    def in_sample_weights(self):
        return self.weight_rows(self._X)

    def in_sample_trace(self):
        n = self._X.shape[0]
        hits = self._neighbor_indices(self._X) == np.arange(n)[:, None]
        return float(hits.any(axis=1).sum() / self.spec.k)


class _LassoModel(_LinearModel):
    def __init__(self, spec, beta, sweeps, kkt_residual):
        super().__init__(spec, beta)
        self.sweeps = sweeps
        self.kkt_residual = kkt_residual

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.beta))


class _TreeModel(FittedModel):
    def __init__(self, spec, tree: RegressionTree):
        super().__init__(spec)
        self.tree = tree

    def predict(self, X):
        return self.tree.predict(X)


class _ForestModel(FittedModel):
    def __init__(self, spec, trees):
        super().__init__(spec)
        self.trees = trees

    def predict(self, X):
        out = np.zeros(X.shape[0])
        for tree in self.trees:
            out += tree.predict(X)
        return out / len(self.trees)


class _RandomFeatureModel(FittedModel):
    def __init__(self, spec, feature_map, inner):
        super().__init__(spec)
        self.feature_map = feature_map
        self._inner = inner

    def _map(self, X):
        return np.tanh(X @ self.feature_map.T)

    def predict(self, X):
        return self._inner.predict(self._map(X))

    def weight_rows(self, X):
        return self._inner.weight_rows(self._map(X))

    def in_sample_weights(self):
        return self._inner.in_sample_weights()

    def in_sample_trace(self):
        return self._inner.in_sample_trace()


# ---------------------------------------------------------------------------
# lasso coordinate descent engine


def _cd_sweeps_py(G, c, lam, b, z, max_sweeps, tol):
    p = b.shape[0]
    viol = np.inf
    for sweep in range(1, max_sweeps + 1):
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            rho = z[j] + gjj * b[j]
            if rho > lam:
                new = (rho - lam) / gjj
            elif rho < -lam:
                new = (rho + lam) / gjj
            else:
                new = 0.0
            diff = new - b[j]
            if diff != 0.0:
                for i in range(p):
                    z[i] -= diff * G[j, i]
                b[j] = new
        if sweep % 50 == 0:
            # shed the drift the incremental updates accumulate
            for i in range(p):
                acc = c[i]
                for j in range(p):
                    acc -= G[i, j] * b[j]
                z[i] = acc
        viol = 0.0
        for j in range(p):
            if b[j] > 0.0:
                v = abs(z[j] - lam)
            elif b[j] < 0.0:
                v = abs(z[j] + lam)
            else:
                v = abs(z[j]) - lam
            if v > viol:
                viol = v
        if viol <= tol:
            return sweep, viol
    return max_sweeps, viol


if njit is not None:
    _cd_sweeps = njit(cache=True)(_cd_sweeps_py)
else:  # pragma: no cover
    _cd_sweeps = _cd_sweeps_py


def lasso_lambda_max(X, y) -> float:
    """Smallest penalty with an all-zero solution: max_j |x_j' y|."""
    return float(np.max(np.abs(X.T @ y)))


def _solve_lasso(X, y, lam, b0=None, max_sweeps=20_000, tol=1e-8):
    """Cyclic coordinate descent for (1/2)|y - Xb|^2 + lam |b|_1."""
    G = np.ascontiguousarray(X.T @ X)
    c = X.T @ y
    b = np.zeros(X.shape[1]) if b0 is None else b0.astype(float).copy()
    z = c - G @ b
    sweeps, viol = _cd_sweeps(G, c, float(lam), b, z, int(max_sweeps), float(tol))
    return b, sweeps, viol


def _lasso_path(X, y, lams, max_sweeps=20_000, tol=1e-8):
    """Warm-started fits along a decreasing penalty sequence."""
    G = np.ascontiguousarray(X.T @ X)
    c = X.T @ y
    b = np.zeros(X.shape[1])
    out = []
    for lam in lams:
        z = c - G @ b
        sweeps, viol = _cd_sweeps(G, c, float(lam), b, z, int(max_sweeps), float(tol))
        out.append((b.copy(), sweeps, viol))
    return out


# ---------------------------------------------------------------------------
# fitting


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ValueError("X must be (n, p) and y length n")
    return X, y


def _fit_least_squares(spec, X, y):
    n, p = X.shape
    if p > n:
        raise ValueError("p > n design is rank deficient; use ridgeless instead")
    try:
        chol = sla.cho_factor(X.T @ X, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("rank-deficient design; use ridgeless instead") from exc
    return _CoreSmootherModel(spec, sla.cho_solve(chol, X.T @ y), X, chol, scale=1.0)


def _fit_ridge(spec, X, y):
    n, p = X.shape
    chol = sla.cho_factor(X.T @ X / n + spec.lam * np.eye(p), lower=True)
    return _CoreSmootherModel(spec, sla.cho_solve(chol, X.T @ y) / n, X, chol, scale=float(n))


def _fit_ridgeless(spec, X, y):
    n, p = X.shape
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    keep = s > max(n, p) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    U, s, Vt = U[:, keep], s[keep], Vt[keep]
    s_inv = 1.0 / s
    beta = Vt.T @ (s_inv * (U.T @ y))
    return _RidgelessModel(spec, beta, X, U, s_inv, Vt)


def _fit_lasso(spec, X, y):
    beta, sweeps, viol = _solve_lasso(X, y, spec.lam)
    if viol > 1e-8:
        raise ConvergenceError(f"lasso stopped after {sweeps} sweeps with KKT residual {viol:.3e}")
    return _LassoModel(spec, beta, sweeps, viol)


def _fit_lassoless(spec, X, y):
    n, p = X.shape
    if p <= n and np.linalg.matrix_rank(X) == p:
        ls = _fit_least_squares(replace(spec, family="least-squares"), X, y)
        return _LassoModel(spec, ls.beta, 0, 0.0)
    lam_max = lasso_lambda_max(X, y)
    if lam_max == 0.0:
        return _LassoModel(spec, np.zeros(p), 0, 0.0)
    lams = lam_max * np.geomspace(0.5, 1e-8, 45)
    path = _lasso_path(X, y, lams)
    beta, sweeps, viol = path[-1]
    var_y = float(np.var(y)) or 1.0
    train_mse = float(np.mean((y - X @ beta) ** 2))
    if train_mse > 1e-6 * var_y:
        raise ConvergenceError(
            f"lassoless path did not interpolate: train mse {train_mse:.3e} > 1e-6 var(y)"
        )
    return _LassoModel(spec, beta, sweeps, viol)


def _fit_forest(spec, X, y, rng):
    p = X.shape[1]
    subset = spec.split_features
    if subset is None:
        subset = int(np.ceil(p / 3))
    subset = min(subset, p)
    rng = np.random.default_rng(0) if rng is None else rng
    trees = [
        grow_tree(X, y, spec.max_leaves, rng=child, split_features=subset if subset < p else None)
        for child in rng.spawn(spec.n_trees)
    ]
    return _ForestModel(spec, trees)


def fit(spec: PredictorSpec, X, y, rng: np.random.Generator | None = None) -> FittedModel:
    """Train the model described by spec on (X, y).

    rng feeds the randomized families (forest feature subsampling and the
    random-features map); ignored by the deterministic ones.
    """
    X, y = _check_xy(X, y)
    family = spec.family
    if family == "least-squares":
        return _fit_least_squares(spec, X, y)
    if family == "ridge":
        return _fit_ridge(spec, X, y)
    if family == "ridgeless":
        return _fit_ridgeless(spec, X, y)
    if family == "lasso":
        return _fit_lasso(spec, X, y)
    if family == "lassoless":
        return _fit_lassoless(spec, X, y)
    if family == "knn":
        if spec.k > X.shape[0]:
            raise ValueError(f"k={spec.k} exceeds the {X.shape[0]} training points")
        return _KnnModel(spec, X, y)
    if family == "tree":
        return _TreeModel(spec, grow_tree(X, y, spec.max_leaves))
    if family == "forest":
        return _fit_forest(spec, X, y, rng)
    # random-features-ridgeless
    if spec.latent_features is not None and X.shape[1] != spec.latent_features:
        raise ValueError(f"expected {spec.latent_features} input features, got {X.shape[1]}")
    rng = np.random.default_rng(0) if rng is None else rng
    latent = X.shape[1]
    var = 1.0 / np.sqrt(latent)
    F = np.sqrt(var) * rng.standard_normal((spec.out_features, latent))
    mapped = np.tanh(X @ F.T)
    inner = _fit_ridgeless(replace(spec, family="ridgeless"), mapped, y)
    return _RandomFeatureModel(spec, F, inner)


def smoother_weights(model: FittedModel) -> SmootherWeights:
    """Weight function of a fitted linear smoother.

    Raises for families that are not linear in the training response.
    """
    if not model.spec.is_smoother or not hasattr(model, "weight_rows"):
        raise ValueError(f"{model.spec.family} is not a linear smoother")
    return SmootherWeights(weights=model.weight_rows, in_sample=model.in_sample_weights())
