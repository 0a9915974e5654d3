"""Maps between normalized random-X optimism and effective degrees of freedom.

The reference scale is least squares regression on d Gaussian features with a
well-specified response, whose random-X optimism is
sigma^2 * (d/n + d/(n-d-1)) for d in [0, n-1). Solving that relation for d
yields the exact matching map `match_df` (a quadratic root, increasing and
concave on [0, infinity), saturating at n-1) and its large-n limit
`match_df_fraction`, which returns degrees of freedom as a fraction of n.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "df_from_optimism",
    "match_df",
    "match_df_derivative",
    "match_df_fraction",
    "match_df_fraction_inverse",
    "reference_optimism",
]


def _check_n(n: int) -> int:
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    return n


def reference_optimism(d, n: int, sigma2: float = 1.0):
    """Random-X optimism of the d-feature least-squares reference model.

    Valid for 0 <= d < n-1; increasing in d, 0 at d=0, and diverging as
    d -> n-1. Does not depend on the feature covariance or the signal.
    """
    n = _check_n(n)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or np.any(d >= n - 1):
        raise ValueError(f"d must lie in [0, n-1) with n={n}")
    out = sigma2 * (d / n + d / (n - d - 1.0))
    return float(out) if out.ndim == 0 else out


def match_df(x, n: int):
    """Exact inverse of the reference optimism: normalized optimism -> df.

    Solves x = d/n + d/(n-d-1) for the root in [0, n-1]. Evaluated in the
    conjugate form 2c / (b + sqrt(b^2 - 4c)) with b = 2n-1+nx and
    c = (n-1)nx, which avoids cancellation for small x or large n; the
    discriminant simplifies to (nx+1)^2 + 4n(n-1).
    """
    n = _check_n(n)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("normalized optimism must be >= 0 (clamp before calling)")
    b = 2.0 * n - 1.0 + n * x
    c = (n - 1.0) * n * x
    disc = np.sqrt((n * x + 1.0) ** 2 + 4.0 * n * (n - 1.0))
    out = 2.0 * c / (b + disc)
    return float(out) if out.ndim == 0 else out


def match_df_derivative(x, n: int):
    """d/dx of `match_df`; used to propagate standard errors onto the df scale."""
    n = _check_n(n)
    x = np.asarray(x, dtype=float)
    disc = np.sqrt((n * x + 1.0) ** 2 + 4.0 * n * (n - 1.0))
    out = 0.5 * n * (1.0 - (n * x + 1.0) / disc)
    return float(out) if out.ndim == 0 else out


def match_df_fraction(x):
    """Large-n limit of match_df(x, n)/n: solves x = u + u/(1-u) for u in [0, 1].

    Equals 1 + x/2 - sqrt(1 + x^2/4), evaluated in conjugate form.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("normalized optimism must be >= 0")
    out = x / (1.0 + 0.5 * x + np.sqrt(1.0 + 0.25 * x**2))
    return float(out) if out.ndim == 0 else out


def match_df_fraction_inverse(u):
    """Inverse of `match_df_fraction`: df fraction u in [0, 1) -> u + u/(1-u)."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u >= 1):
        raise ValueError("df fraction must lie in [0, 1)")
    out = u + u / (1.0 - u)
    return float(out) if out.ndim == 0 else out


def df_from_optimism(opt, sigma2: float, n: int):
    """Degrees of freedom matched to an estimated optimism.

    Negative estimates (possible at finite replication counts) clamp to 0
    before the matching map is applied; output lies in [0, n-1].
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    opt = np.asarray(opt, dtype=float)
    return match_df(np.maximum(opt, 0.0) / sigma2, n)
