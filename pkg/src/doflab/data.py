"""Synthetic data models, randomness policy, and shared error metrics.

Every generator is a pure function of (spec, seed, replication index): the
randomness policy hands out independent counter-based streams keyed by
(seed, replication, role), so replications can run in any order, on any
number of workers, and still produce bit-identical data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "Dataset",
    "GeneratorSpec",
    "NoiseSpec",
    "TaskInstance",
    "ar1_covariance",
    "generate",
    "mean_squared_error",
    "sample_unit_sphere",
    "stream",
]

GENERATOR_VARIANTS = (
    "nonlinear-ar1",
    "sparse-linear",
    "linear-ar1",
    "bernoulli-signal",
    "random-features",
)

# Stream roles. Each (seed, rep, role) triple keys one independent generator;
# signal-free (intrinsic) runs reuse the feature roles of the signal runs so
# the two estimates share feature draws.
_ROLES = {
    "signal": 0,
    "train-x": 1,
    "train-noise": 2,
    "test-x": 3,
    "test-noise": 4,
    "pure-noise-train": 5,
    "pure-noise-test": 6,
    "predictor": 7,
    "fixed-y": 8,
    "cv": 9,
}


def stream(seed: int, rep: int, role: str) -> np.random.Generator:
    """Independent counter-based random stream for (seed, replication, role)."""
    if role not in _ROLES:
        raise ValueError(f"unknown stream role {role!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(rep), _ROLES[role]))
    return np.random.Generator(np.random.Philox(ss))


def mean_squared_error(pred, truth) -> float:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    return float(np.mean((pred - truth) ** 2))


def ar1_covariance(p: int, rho: float) -> np.ndarray:
    """AR(1) covariance with entries rho**|i-j|; positive definite for rho in [0,1)."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must be in [0, 1), got {rho}")
    if p < 1:
        raise ValueError("p must be >= 1")
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


@lru_cache(maxsize=32)
def _ar1_cholesky(p: int, rho: float) -> np.ndarray:
    # Dense factorization once per (p, rho); cheap for the p <= ~800 used here.
    factor = np.linalg.cholesky(ar1_covariance(p, rho))
    factor.setflags(write=False)
    return factor


def sample_unit_sphere(p: int, rng) -> np.ndarray:
    """Uniform draw from the unit sphere in R^p via a normalized Gaussian."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    g = rng.standard_normal(p)
    return g / np.linalg.norm(g)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive-noise law for the response; variance must be positive."""

    sigma2: float = 1.0
    distribution: str = "gaussian"  # or "rademacher-scaled"

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")
        if self.distribution not in ("gaussian", "rademacher-scaled"):
            raise ValueError(f"unknown noise distribution {self.distribution!r}")

    def draw(self, m: int, rng: np.random.Generator) -> np.ndarray:
        scale = np.sqrt(self.sigma2)
        if self.distribution == "gaussian":
            return scale * rng.standard_normal(m)
        return scale * (2.0 * rng.integers(0, 2, size=m) - 1.0)


@dataclass(frozen=True)
class GeneratorSpec:
    """Specification of one synthetic regression data model.

    Variants
    --------
    nonlinear-ar1:
        x ~ N(0, AR1(rho)); y = x'beta + (|x|^2/p - 1) + eps, beta uniform on
        the unit sphere. The quadratic term makes the linear model
        misspecified; its variance is 2*tr(Sigma^2)/p^2.
    linear-ar1:
        same features, y = x'beta + eps (well specified).
    sparse-linear:
        iid standard normal features, first s coefficients equal alpha
        (default alpha = sigma/sqrt(s), which sets Var[x'beta] = sigma^2).
    bernoulli-signal:
        x ~ N(0, I/n); beta_j = sqrt(n/(delta*p)) with probability delta,
        else 0 (the native scaling of the scalar fixed-point theory).
    random-features:
        latent z ~ N(0, AR1(rho)) in R^latent_p with the nonlinear-ar1
        response; emitted features are tanh(F z), F entries
        N(0, 1/sqrt(latent_p)) by default reading 1/sqrt(latent_p) as the
        variance (set rf_scale="std" for the other reading).
    """

    variant: str
    n: int
    p: int
    rho: float = 0.0
    sigma: float = 1.0
    s: int | None = None
    alpha: float | None = None
    delta: float | None = None
    latent_p: int | None = None
    x_entries: str = "gaussian"  # or "rademacher" (iid sign entries before the AR1 factor)
    rf_scale: str = "variance"  # reading of the N(0, 1/sqrt(P)) map entries
    noise: str = "gaussian"  # response-noise law; pure-noise protocols stay Gaussian

    def __post_init__(self):
        if self.variant not in GENERATOR_VARIANTS:
            raise ValueError(f"unknown generator variant {self.variant!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must be in [0, 1)")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.x_entries not in ("gaussian", "rademacher"):
            raise ValueError(f"unknown x_entries {self.x_entries!r}")
        NoiseSpec(self.sigma**2, self.noise)  # validates the noise law
        if self.rf_scale not in ("variance", "std"):
            raise ValueError(f"unknown rf_scale {self.rf_scale!r}")
        if self.variant == "sparse-linear":
            if self.s is None or self.s < 1:
                raise ValueError("sparse-linear requires s >= 1")
            if self.s > self.p:
                raise ValueError("sparsity s must be <= p")
        if self.variant == "bernoulli-signal":
            if self.delta is None or not 0.0 < self.delta <= 1.0:
                raise ValueError("bernoulli-signal requires delta in (0, 1]")
        if self.variant == "random-features":
            if self.latent_p is None or self.latent_p < 1:
                raise ValueError("random-features requires latent_p >= 1")

    @property
    def sigma2(self) -> float:
        return self.sigma**2

    @property
    def generator_id(self) -> str:
        parts = [f"n={self.n}", f"p={self.p}"]
        if self.variant in ("nonlinear-ar1", "linear-ar1", "random-features"):
            parts.append(f"rho={self.rho:g}")
        parts.append(f"sigma={self.sigma:g}")
        if self.variant == "sparse-linear":
            parts.append(f"s={self.s}")
            if self.alpha is not None:
                parts.append(f"alpha={self.alpha:g}")
        if self.variant == "bernoulli-signal":
            parts.append(f"delta={self.delta:g}")
        if self.variant == "random-features":
            parts.append(f"latent_p={self.latent_p}")
        if self.x_entries != "gaussian":
            parts.append(self.x_entries)
        return f"{self.variant}({', '.join(parts)})"


@dataclass(frozen=True)
class Dataset:
    """One realized training set with provenance."""

    features: np.ndarray = field(repr=False)
    response: np.ndarray = field(repr=False)
    generator_id: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be a 2d array")
        if len(self.response) != self.features.shape[0]:
            raise ValueError("response length must equal the feature row count")
        if self.features.shape[0] < 2:
            raise ValueError("need n >= 2 samples")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]


class TaskInstance:
    """One replication's realized data-generating process.

    The signal (coefficients, random-feature map) is drawn once from the
    "signal" stream; feature and noise draws then come from the requested
    role streams, so two runs that share (spec, seed, rep) see identical
    data regardless of evaluation order.
    """

    def __init__(self, spec: GeneratorSpec, seed: int, rep: int = 0):
        self.spec = spec
        self.seed = int(seed)
        self.rep = int(rep)
        rng = stream(seed, rep, "signal")
        v = spec.variant
        if v in ("nonlinear-ar1", "linear-ar1"):
            self.beta = sample_unit_sphere(spec.p, rng)
        elif v == "sparse-linear":
            alpha = spec.alpha if spec.alpha is not None else spec.sigma / np.sqrt(spec.s)
            beta = np.zeros(spec.p)
            beta[: spec.s] = alpha
            self.beta = beta
        elif v == "bernoulli-signal":
            mask = rng.random(spec.p) < spec.delta
            self.beta = mask * np.sqrt(spec.n / (spec.delta * spec.p))
        elif v == "random-features":
            self.beta = sample_unit_sphere(spec.latent_p, rng)
            var = 1.0 / np.sqrt(spec.latent_p)
            scale = np.sqrt(var) if spec.rf_scale == "variance" else var
            self.feature_map = scale * rng.standard_normal((spec.p, spec.latent_p))

    @property
    def sigma2(self) -> float:
        return self.spec.sigma2

    @property
    def has_mean(self) -> bool:
        """Whether the conditional mean is evaluable at arbitrary feature vectors."""
        return self.spec.variant != "random-features"

    def mean(self, X: np.ndarray) -> np.ndarray:
        """Conditional mean of the response at the given feature rows."""
        spec = self.spec
        if spec.variant in ("linear-ar1", "sparse-linear", "bernoulli-signal"):
            return X @ self.beta
        if spec.variant == "nonlinear-ar1":
            return X @ self.beta + (np.sum(X**2, axis=1) / spec.p - 1.0)
        raise ValueError(f"{spec.variant} has no closed-form conditional mean in feature space")

    def _draw_raw(self, m: int, rng: np.random.Generator, dim: int) -> np.ndarray:
        if self.spec.x_entries == "rademacher":
            return (2.0 * rng.integers(0, 2, size=(m, dim)) - 1.0).astype(float)
        return rng.standard_normal((m, dim))

    def draw_features(self, m: int, role: str) -> tuple[np.ndarray, np.ndarray]:
        """Draw m feature rows from the given role stream.

        Returns (features, mean values); for the random-features variant the
        mean is computed from the latent draw before the tanh map is applied.
        """
        spec = self.spec
        rng = stream(self.seed, self.rep, role)
        if spec.variant in ("nonlinear-ar1", "linear-ar1"):
            Z = self._draw_raw(m, rng, spec.p)
            X = Z @ _ar1_cholesky(spec.p, spec.rho).T if spec.rho > 0 else Z
            return X, self.mean(X)
        if spec.variant == "sparse-linear":
            X = self._draw_raw(m, rng, spec.p)
            return X, X @ self.beta
        if spec.variant == "bernoulli-signal":
            X = self._draw_raw(m, rng, spec.p) / np.sqrt(spec.n)
            return X, X @ self.beta
        # random-features: latent nonlinear-ar1 model, emitted features tanh(F z)
        Z = self._draw_raw(m, rng, spec.latent_p)
        if spec.rho > 0:
            Z = Z @ _ar1_cholesky(spec.latent_p, spec.rho).T
        f = Z @ self.beta + (np.sum(Z**2, axis=1) / spec.latent_p - 1.0)
        return np.tanh(Z @ self.feature_map.T), f

    def noise(self, m: int, role: str, sigma2: float | None = None) -> np.ndarray:
        """Pure-noise draws, always Gaussian (the reference-model convention)."""
        rng = stream(self.seed, self.rep, role)
        scale = np.sqrt(self.spec.sigma2 if sigma2 is None else sigma2)
        return scale * rng.standard_normal(m)

    def sample(self, m: int, x_role: str, noise_role: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Draw (features, conditional mean, response) for m points."""
        X, f = self.draw_features(m, x_role)
        eps = NoiseSpec(self.spec.sigma2, self.spec.noise).draw(
            m, stream(self.seed, self.rep, noise_role))
        return X, f, f + eps

    def train(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.sample(self.spec.n, "train-x", "train-noise")

    def test(self, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.sample(m, "test-x", "test-noise")


def generate(spec: GeneratorSpec, seed: int) -> Dataset:
    """Materialize one training set; bit-identical for identical (spec, seed)."""
    task = TaskInstance(spec, seed, rep=0)
    X, _, y = task.train()
    return Dataset(features=X, response=y, generator_id=spec.generator_id, seed=int(seed))
