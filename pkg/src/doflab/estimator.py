"""Monte Carlo estimation of optimism, degrees of freedom, and smoother functionals.

The protocol for every estimate is the same: per replication, realize the
data model, fit, measure training error, then measure test error on an
independent draw; aggregates and standard errors come from the replication
sample. Signal-free ("intrinsic") runs replace the response, on both sides,
by pure noise while reusing the same feature streams, so the emergent and
intrinsic estimates are positively coupled and their difference is estimated
with reduced variance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .data import GeneratorSpec, Dataset, TaskInstance, mean_squared_error, stream
from .matching import df_from_optimism, match_df_derivative
from .predictors import PredictorSpec, fit, smoother_weights

__all__ = [
    "DofReport",
    "EstimationError",
    "EstimatorConfig",
    "ExcessBiasVariance",
    "LuanDf",
    "OptimismEstimate",
    "SmootherOptimism",
    "cv_optimism",
    "dof_report",
    "estimate_intrinsic_optimism",
    "estimate_random_x_optimism",
    "estimate_sigma2_proxy",
    "fixed_x_df",
    "linear_smoother_optimism",
    "excess_bias_variance",
    "luan_predictive_df",
]


class EstimationError(RuntimeError):
    """Too many replications failed, or a required input was missing."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Replication counts, seeding, and the noise-level source.

    sigma2 is the known noise variance if available; leave None and estimate
    a proxy with `estimate_sigma2_proxy` otherwise. fixed_x_inner/outer size
    the covariance Monte Carlo used for fixed-X degrees of freedom of
    non-smoother models.
    """

    n_reps: int = 100
    test_size: int = 1000
    seed: int = 0
    sigma2: float | None = None
    cv_folds: int | None = None
    fixed_x_inner: int = 100
    fixed_x_outer: int = 20
    max_failure_rate: float = 0.1

    def __post_init__(self):
        if self.n_reps < 2:
            raise ValueError("n_reps must be >= 2")
        if self.test_size < 1:
            raise ValueError("test_size must be >= 1")
        if self.sigma2 is not None and self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0 when given")


@dataclass(frozen=True)
class OptimismEstimate:
    """Paired training/test error averages across replications."""

    err_R: float
    err_T: float
    optimism: float
    se: float
    n_reps: int
    rep_err_R: np.ndarray = field(repr=False, compare=False, default=None)
    rep_err_T: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def rep_optimism(self) -> np.ndarray:
        return self.rep_err_R - self.rep_err_T


@dataclass(frozen=True)
class DofReport:
    """Fixed-X, emergent, and intrinsic degrees of freedom with uncertainty."""

    df_fixed: float
    df_emergent: float
    df_intrinsic: float
    df_bias: float
    sigma2_used: float
    df_fixed_se: float
    df_emergent_se: float
    df_intrinsic_se: float
    df_bias_se: float
    n: int
    emergent: OptimismEstimate = field(default=None, repr=False, compare=False)
    intrinsic: OptimismEstimate = field(default=None, repr=False, compare=False)


def _aggregate(rep_err_R, rep_err_T) -> OptimismEstimate:
    rep_err_R = np.asarray(rep_err_R)
    rep_err_T = np.asarray(rep_err_T)
    opt = rep_err_R - rep_err_T
    R = len(opt)
    return OptimismEstimate(
        err_R=float(rep_err_R.mean()),
        err_T=float(rep_err_T.mean()),
        optimism=float(rep_err_R.mean() - rep_err_T.mean()),
        se=float(opt.std(ddof=1) / np.sqrt(R)),
        n_reps=R,
        rep_err_R=rep_err_R,
        rep_err_T=rep_err_T,
    )


def _run_replications(gen: GeneratorSpec, pred: PredictorSpec, cfg: EstimatorConfig,
                      pure_noise: bool, sigma2: float | None = None) -> OptimismEstimate:
    rep_err_R, rep_err_T = [], []
    failures = 0
    for r in range(cfg.n_reps):
        task = TaskInstance(gen, cfg.seed, r)
        X, _, y = task.train()
        X0, _, y0 = task.test(cfg.test_size)
        if pure_noise:
            y = task.noise(gen.n, "pure-noise-train", sigma2)
            y0 = task.noise(cfg.test_size, "pure-noise-test", sigma2)
        try:
            model = fit(pred, X, y, rng=stream(cfg.seed, r, "predictor"))
        except Exception:
            failures += 1
            if failures > cfg.max_failure_rate * cfg.n_reps:
                raise EstimationError(
                    f"{failures}/{r + 1} replications failed fitting {pred.label()}"
                )
            continue
        rep_err_T.append(mean_squared_error(model.predict(X), y))
        rep_err_R.append(mean_squared_error(model.predict(X0), y0))
    return _aggregate(rep_err_R, rep_err_T)


def _paired_replications(gen, pred, cfg, sigma2, fixed_method=None):
    """One pass per replication for the emergent run, the pure-noise run, and
    (when cheap) the matching fixed-X statistic (trace or nonzero count).

    Linear models refit the noise response through the stored factorization;
    results are identical to the single-purpose estimators because all draws
    are keyed by (seed, rep, role), never by evaluation order.
    """
    em_R, em_T, in_R, in_T, fixed = [], [], [], [], []
    failures = 0
    for r in range(cfg.n_reps):
        task = TaskInstance(gen, cfg.seed, r)
        X, _, y = task.train()
        X0, _, y0 = task.test(cfg.test_size)
        v = task.noise(gen.n, "pure-noise-train", sigma2)
        v0 = task.noise(cfg.test_size, "pure-noise-test", sigma2)
        try:
            model = fit(pred, X, y, rng=stream(cfg.seed, r, "predictor"))
            if hasattr(model, "coef_for"):
                beta_v = model.coef_for(v)
                pred_in, pred_out = X @ beta_v, X0 @ beta_v
            else:
                model_v = fit(pred, X, v, rng=stream(cfg.seed, r, "predictor"))
                pred_in, pred_out = model_v.predict(X), model_v.predict(X0)
        except Exception:
            failures += 1
            if failures > cfg.max_failure_rate * cfg.n_reps:
                raise EstimationError(
                    f"{failures}/{r + 1} replications failed fitting {pred.label()}"
                )
            continue
        em_T.append(mean_squared_error(model.predict(X), y))
        em_R.append(mean_squared_error(model.predict(X0), y0))
        in_T.append(mean_squared_error(pred_in, v))
        in_R.append(mean_squared_error(pred_out, v0))
        if fixed_method == "trace":
            fixed.append(model.in_sample_trace() if hasattr(model, "in_sample_trace")
                         else float(np.trace(smoother_weights(model).in_sample)))
        elif fixed_method == "nonzeros":
            fixed.append(float(model.n_nonzero))
    return (_aggregate(em_R, em_T), _aggregate(in_R, in_T),
            np.asarray(fixed) if fixed_method else None)


def estimate_random_x_optimism(gen: GeneratorSpec, pred: PredictorSpec,
                               cfg: EstimatorConfig) -> OptimismEstimate:
    """Emergent random-X optimism: test error on fresh draws minus training error."""
    return _run_replications(gen, pred, cfg, pure_noise=False)


def estimate_intrinsic_optimism(gen: GeneratorSpec, pred: PredictorSpec,
                                cfg: EstimatorConfig) -> OptimismEstimate:
    """Optimism of the model trained and tested on pure noise N(0, sigma2).

    Feature draws reuse the emergent streams; only the responses change.
    """
    if cfg.sigma2 is None:
        raise EstimationError("intrinsic estimation needs sigma2 (known or proxy)")
    return _run_replications(gen, pred, cfg, pure_noise=True, sigma2=cfg.sigma2)


def estimate_sigma2_proxy(gen: GeneratorSpec, pred_grid, cfg: EstimatorConfig) -> float:
    """Noise-level proxy: smallest estimated test error over a model grid."""
    grid = list(pred_grid)
    if not grid:
        raise ValueError("pred_grid must be nonempty")
    return min(estimate_random_x_optimism(gen, pred, cfg).err_R for pred in grid)


def _df_and_se(opt: OptimismEstimate, sigma2: float, n: int) -> tuple[float, float]:
    x = max(opt.optimism, 0.0) / sigma2
    df = df_from_optimism(opt.optimism, sigma2, n)
    return float(df), float(match_df_derivative(x, n) * opt.se / sigma2)


def dof_report(gen: GeneratorSpec, pred: PredictorSpec, cfg: EstimatorConfig,
               proxy_grid=None) -> DofReport:
    """Assemble fixed-X, emergent, and intrinsic degrees of freedom.

    df_bias = df_emergent - df_intrinsic exactly; its standard error uses the
    replication-level covariance of the two paired optimism estimates.
    """
    sigma2 = cfg.sigma2
    if sigma2 is None:
        if proxy_grid is None:
            raise EstimationError("need cfg.sigma2 or a proxy_grid to calibrate df")
        sigma2 = estimate_sigma2_proxy(gen, proxy_grid, cfg)
    cfg = replace(cfg, sigma2=sigma2)
    fixed_method = _fixed_x_method(pred)
    fused_fixed = fixed_method if fixed_method in ("trace", "nonzeros") else None
    emergent, intrinsic, fixed_vals = _paired_replications(gen, pred, cfg, sigma2, fused_fixed)
    n = gen.n
    df_e, se_e = _df_and_se(emergent, sigma2, n)
    df_i, se_i = _df_and_se(intrinsic, sigma2, n)
    g_e = match_df_derivative(max(emergent.optimism, 0.0) / sigma2, n) / sigma2
    g_i = match_df_derivative(max(intrinsic.optimism, 0.0) / sigma2, n) / sigma2
    R = min(emergent.n_reps, intrinsic.n_reps)
    cov = 0.0
    if emergent.n_reps == intrinsic.n_reps:
        cov = float(np.cov(emergent.rep_optimism, intrinsic.rep_optimism, ddof=1)[0, 1]) / R
    var_bias = max((g_e * emergent.se) ** 2 + (g_i * intrinsic.se) ** 2 - 2 * g_e * g_i * cov, 0.0)
    if fused_fixed and len(fixed_vals):
        df_f = float(fixed_vals.mean())
        se_f = float(fixed_vals.std(ddof=1) / np.sqrt(len(fixed_vals)))
    else:
        df_f, se_f = _fixed_x_df_with_se(gen, pred, cfg)
    return DofReport(
        df_fixed=df_f,
        df_emergent=df_e,
        df_intrinsic=df_i,
        df_bias=df_e - df_i,
        sigma2_used=float(sigma2),
        df_fixed_se=se_f,
        df_emergent_se=se_e,
        df_intrinsic_se=se_i,
        df_bias_se=float(np.sqrt(var_bias)),
        n=n,
        emergent=emergent,
        intrinsic=intrinsic,
    )


# ---------------------------------------------------------------------------
# fixed-X degrees of freedom


def _fixed_x_method(pred: PredictorSpec) -> str:
    if pred.is_smoother:
        return "trace"
    if pred.family in ("lasso", "lassoless"):
        return "nonzeros"
    return "mc"


def _fixed_x_df_with_se(gen, pred, cfg, method="auto") -> tuple[float, float]:
    if method == "auto":
        method = _fixed_x_method(pred)
    if method == "trace":
        vals = []
        for r in range(cfg.n_reps):
            task = TaskInstance(gen, cfg.seed, r)
            X, _, y = task.train()
            model = fit(pred, X, y, rng=stream(cfg.seed, r, "predictor"))
            if hasattr(model, "in_sample_trace"):
                vals.append(model.in_sample_trace())
            else:
                vals.append(float(np.trace(smoother_weights(model).in_sample)))
    elif method == "nonzeros":
        vals = []
        for r in range(cfg.n_reps):
            task = TaskInstance(gen, cfg.seed, r)
            X, _, y = task.train()
            model = fit(pred, X, y, rng=stream(cfg.seed, r, "predictor"))
            vals.append(float(model.n_nonzero))
    elif method == "mc":
        sigma2 = gen.sigma2
        vals = []
        for o in range(cfg.fixed_x_outer):
            task = TaskInstance(gen, cfg.seed, o)
            X, f, _ = task.train()
            rng = stream(cfg.seed, o, "fixed-y")
            noise = np.sqrt(sigma2) * rng.standard_normal((cfg.fixed_x_inner, gen.n))
            Y = f[None, :] + noise
            preds = np.empty_like(Y)
            pred_rngs = stream(cfg.seed, o, "predictor").spawn(cfg.fixed_x_inner)
            for t in range(cfg.fixed_x_inner):
                preds[t] = fit(pred, X, Y[t], rng=pred_rngs[t]).predict(X)
            Yc = Y - Y.mean(axis=0)
            Pc = preds - preds.mean(axis=0)
            cov_sum = float(np.sum(Yc * Pc) / (cfg.fixed_x_inner - 1))
            vals.append(cov_sum / sigma2)
    else:
        raise ValueError(f"unknown fixed-X method {method!r}")
    vals = np.asarray(vals)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals)))


def fixed_x_df(gen: GeneratorSpec, pred: PredictorSpec, cfg: EstimatorConfig,
               method: str = "auto") -> float:
    """Fixed-X degrees of freedom, (1/sigma^2) sum_i Cov[y_i, fhat(x_i) | X].

    Route: smoother trace for linear smoothers, nonzero-coefficient count for
    the lasso family, and a y-resampling covariance Monte Carlo otherwise
    (selectable explicitly via method).
    """
    return _fixed_x_df_with_se(gen, pred, cfg, method)[0]


# ---------------------------------------------------------------------------
# closed-form linear-smoother functionals (Monte Carlo over X and x0 only)


@dataclass(frozen=True)
class SmootherOptimism:
    intrinsic: float
    emergent: float
    intrinsic_se: float
    emergent_se: float
    n_reps: int


@dataclass(frozen=True)
class ExcessBiasVariance:
    b_plus: float
    v_plus: float
    b_plus_se: float
    v_plus_se: float
    mean_fixed_optimism: float
    n_reps: int


@dataclass(frozen=True)
class LuanDf:
    value: float
    se: float
    n_reps: int


def _smoother_rep_stats(gen, pred, cfg):
    """Per-replication pieces of the smoother optimism formulas.

    Yields (n, trace, trace_sq, quad, bias_out, bias_in) where quad is the
    average squared weight norm at fresh test features, and the bias terms
    are the out-of-sample and in-sample squared approximation errors of the
    smoother applied to the true conditional mean.
    """
    for r in range(cfg.n_reps):
        task = TaskInstance(gen, cfg.seed, r)
        X, f, y = task.train()
        model = fit(pred, X, y, rng=stream(cfg.seed, r, "predictor"))
        W = smoother_weights(model)
        Win = W.in_sample
        X0, f0, _ = task.test(cfg.test_size)
        W0 = W.weights(X0)
        trace = float(np.trace(Win))
        trace_sq = float(np.sum(Win * Win))
        quad = float(np.mean(np.sum(W0 * W0, axis=1)))
        bias_out = float(np.mean((f0 - W0 @ f) ** 2))
        bias_in = float(np.mean((f - Win @ f) ** 2))
        yield gen.n, trace, trace_sq, quad, bias_out, bias_in


def linear_smoother_optimism(gen: GeneratorSpec, pred: PredictorSpec,
                             cfg: EstimatorConfig) -> SmootherOptimism:
    """Intrinsic and emergent optimism of a linear smoother from its weights.

    intrinsic = sigma^2 E[2 tr(L)/n + |L(x0)|^2 - tr(L'L)/n]; the emergent
    version adds the squared-bias gap between fresh and in-sample points.
    """
    sigma2 = gen.sigma2
    intr, emer = [], []
    for n, trace, trace_sq, quad, bias_out, bias_in in _smoother_rep_stats(gen, pred, cfg):
        i = sigma2 * (2.0 * trace / n + quad - trace_sq / n)
        intr.append(i)
        emer.append(i + bias_out - bias_in)
    intr = np.asarray(intr)
    emer = np.asarray(emer)
    R = len(intr)
    return SmootherOptimism(
        intrinsic=float(intr.mean()),
        emergent=float(emer.mean()),
        intrinsic_se=float(intr.std(ddof=1) / np.sqrt(R)),
        emergent_se=float(emer.std(ddof=1) / np.sqrt(R)),
        n_reps=R,
    )


def excess_bias_variance(gen: GeneratorSpec, pred: PredictorSpec,
                         cfg: EstimatorConfig) -> ExcessBiasVariance:
    """Excess bias and excess variance of a linear smoother.

    These are the fresh-point minus in-sample gaps in squared bias and in
    variance; together with the mean fixed-X optimism they rebuild the
    random-X optimism.
    """
    sigma2 = gen.sigma2
    b, v, fixed = [], [], []
    for n, trace, trace_sq, quad, bias_out, bias_in in _smoother_rep_stats(gen, pred, cfg):
        b.append(bias_out - bias_in)
        v.append(sigma2 * (quad - trace_sq / n))
        fixed.append(2.0 * sigma2 * trace / n)
    b = np.asarray(b)
    v = np.asarray(v)
    R = len(b)
    return ExcessBiasVariance(
        b_plus=float(b.mean()),
        v_plus=float(v.mean()),
        b_plus_se=float(b.std(ddof=1) / np.sqrt(R)),
        v_plus_se=float(v.std(ddof=1) / np.sqrt(R)),
        mean_fixed_optimism=float(np.mean(fixed)),
        n_reps=R,
    )


def luan_predictive_df(gen: GeneratorSpec, pred: PredictorSpec,
                       cfg: EstimatorConfig) -> LuanDf:
    """Variance-only df for linear smoothers on the fixed-X optimism scale.

    tr(L) + (n/2)(E|L(x0)|^2 - tr(L'L)/n), averaged over feature draws; its
    defining identity is intrinsic optimism = (2 sigma^2/n) * value.
    """
    vals = []
    for n, trace, trace_sq, quad, _, _ in _smoother_rep_stats(gen, pred, cfg):
        vals.append(trace + 0.5 * n * (quad - trace_sq / n))
    vals = np.asarray(vals)
    return LuanDf(
        value=float(vals.mean()),
        se=float(vals.std(ddof=1) / np.sqrt(len(vals))),
        n_reps=len(vals),
    )


# ---------------------------------------------------------------------------
# single-dataset cross-validation path


def cv_optimism(data: Dataset, pred: PredictorSpec, folds: int) -> OptimismEstimate:
    """K-fold estimate of optimism from one dataset, no generator required.

    Test error comes from cross-validation; training error from the fit on
    the full data. The standard error reflects fold-to-fold spread only.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    n = data.n
    if folds > n:
        raise ValueError("more folds than samples")
    perm = stream(data.seed, 0, "cv").permutation(n)
    blocks = np.array_split(perm, folds)
    fold_errs = []
    for b, holdout in enumerate(blocks):
        train = np.setdiff1d(perm, holdout, assume_unique=True)
        if pred.family == "knn" and pred.k > len(train):
            raise ValueError(f"fold training size {len(train)} < k={pred.k}")
        model = fit(pred, data.features[train], data.response[train],
                    rng=stream(data.seed, b, "predictor"))
        fold_errs.append(mean_squared_error(model.predict(data.features[holdout]),
                                            data.response[holdout]))
    fold_errs = np.asarray(fold_errs)
    full = fit(pred, data.features, data.response, rng=stream(data.seed, folds, "predictor"))
    err_T = mean_squared_error(full.predict(data.features), data.response)
    sizes = np.array([len(b) for b in blocks])
    err_R = float(np.sum(fold_errs * sizes) / n)
    return OptimismEstimate(
        err_R=err_R,
        err_T=err_T,
        optimism=err_R - err_T,
        se=float(fold_errs.std(ddof=1) / np.sqrt(folds)),
        n_reps=folds,
        rep_err_R=fold_errs,
        rep_err_T=np.full(folds, err_T),
    )
