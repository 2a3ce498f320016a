"""Ordinary least squares, delta-method product inference, and BH-FDR.

OLS goes through a QR decomposition for stable rank detection; the
coefficient covariance is ``residual_variance * (X'X)^{-1}`` computed from
the R factor. Product terms (mediation a*b) get first-order delta-method
standard errors under an independent-fit approximation, with normal
reference p-values; individual OLS coefficients use the t reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular

from .errors import CollinearityError, InsufficientDataError

RANK_TOL = 1e-10


@dataclass(frozen=True)
class LinearFit:
    """OLS fit: coefficients, their covariance, and residual variance."""

    coefficients: np.ndarray
    covariance: np.ndarray
    residual_variance: float
    dof: int
    names: tuple[str, ...]

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def coef_pvalues(self) -> np.ndarray:
        """Two-sided t-test p-values for each coefficient being zero."""
        se = self.se
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(se > 0, self.coefficients / se, np.inf * np.sign(self.coefficients))
        p = 2.0 * stats.t.sf(np.abs(t), df=self.dof)
        return np.where(np.isnan(p), 1.0, p)

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def coef_se(self, name: str) -> float:
        return float(self.se[self.names.index(name)])


def ols_fit(design: np.ndarray, response: np.ndarray, names=None) -> LinearFit:
    """Least-squares fit of ``response`` on ``design`` (caller supplies intercept).

    Raises :class:`InsufficientDataError` when n <= k and
    :class:`CollinearityError` naming a dependent column when the design is
    rank deficient (relative tolerance 1e-10 on the R diagonal).
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError("design must be a 2-D matrix")
    n, k = X.shape
    if y.shape[0] != n:
        raise ValueError(f"response length {y.shape[0]} does not match design rows {n}")
    if names is None:
        names = tuple(f"x{j}" for j in range(k))
    else:
        names = tuple(names)
        if len(names) != k:
            raise ValueError("names length does not match design columns")
    if n <= k:
        raise InsufficientDataError(f"OLS needs n > k, got n={n}, k={k}")

    Q, R = np.linalg.qr(X)
    rdiag = np.abs(np.diag(R))
    ref = rdiag.max() if rdiag.size else 0.0
    dependent = np.flatnonzero(rdiag <= RANK_TOL * ref)
    if ref == 0.0 or dependent.size:
        j = int(dependent[0]) if dependent.size else 0
        raise CollinearityError(
            f"design is rank deficient; column {names[j]!r} is linearly dependent"
        )

    qty = Q.T @ y
    coef = solve_triangular(R, qty, lower=False)
    resid = y - X @ coef
    dof = n - k
    rss = float(resid @ resid)
    sigma2 = rss / dof
    rinv = solve_triangular(R, np.eye(k), lower=False)
    xtx_inv = rinv @ rinv.T
    cov = sigma2 * xtx_inv
    cov = 0.5 * (cov + cov.T)
    return LinearFit(
        coefficients=coef,
        covariance=cov,
        residual_variance=sigma2,
        dof=dof,
        names=names,
    )


@dataclass(frozen=True)
class ProductInterval:
    estimate: float
    se: float
    lo: float
    hi: float
    p: float


def delta_product_interval(a, se_a, b, se_b, level=0.95) -> ProductInterval:
    """Normal interval and test for the product a*b of two independent estimates.

    se = sqrt(b^2 se_a^2 + a^2 se_b^2), the first-order (Sobel-form) delta
    variance without a covariance cross-term.
    """
    if se_a < 0 or se_b < 0:
        raise ValueError("standard errors must be nonnegative")
    if not 0 < level < 1:
        raise ValueError(f"level must be in (0, 1), got {level}")
    est = float(a * b)
    se = float(np.sqrt(b * b * se_a * se_a + a * a * se_b * se_b))
    z = stats.norm.ppf(0.5 + level / 2)
    if se > 0:
        p = float(2.0 * stats.norm.sf(abs(est) / se))
    else:
        p = 0.0 if est != 0 else 1.0
    return ProductInterval(est, se, est - z * se, est + z * se, p)


def normal_interval(est, se, level=0.95) -> tuple[float, float, float]:
    """(lo, hi, p) for a normal-reference estimate; shares the delta conventions."""
    if se < 0:
        raise ValueError("standard error must be nonnegative")
    z = stats.norm.ppf(0.5 + level / 2)
    if se > 0:
        p = float(2.0 * stats.norm.sf(abs(est) / se))
    else:
        p = 0.0 if est != 0 else 1.0
    return est - z * se, est + z * se, p


def bh_adjust(pvalues) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted q-values (order preserving)."""
    p = np.asarray(pvalues, dtype=float).ravel()
    if p.size == 0:
        return p.copy()
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1)
    q_sorted = np.minimum.accumulate(ranked[::-1])[::-1]
    q = np.empty(m)
    q[order] = np.minimum(q_sorted, 1.0)
    return q
