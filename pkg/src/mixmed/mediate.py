"""Single-exposure mediation analysis on linear models.

The product method fits a mediator model M ~ exposure + covariates and an
outcome model Y ~ exposure + M + covariates, then forms

    NDE = (x - x*) b_x,   NIE = (x - x*) b_m a_x,   TE = NDE + NIE,

where a_x is the exposure coefficient from the mediator model and b_x, b_m
come from the outcome model. The difference method replaces the mediator
model with a total-effect model Y ~ exposure + covariates and recovers the
same NIE by subtraction; with linear models and no exposure-mediator
interaction the two are algebraically identical.

``sema`` runs one product-method analysis per exposure in either regime
(with or without co-exposure adjustment), flags active exposures by
BH-adjusted NIE p-values, and sums per-exposure NIEs into a heuristic
global NIE whose interval assumes independence across exposures. The
unadjusted regime is biased by construction and is labeled as such in
emitted reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Contrast, Dataset
from .linmod import bh_adjust, delta_product_interval, normal_interval, ols_fit


@dataclass(frozen=True)
class EffectEstimate:
    estimate: float
    se: float
    ci_lo: float
    ci_hi: float
    p: float


@dataclass(frozen=True)
class MediationEffects:
    """TE/NDE/NIE for one exposure contrast."""

    te: EffectEstimate
    nde: EffectEstimate
    nie: EffectEstimate
    contrast: Contrast
    exposure: str
    method: str

    def __post_init__(self):
        gap = abs(self.te.estimate - (self.nde.estimate + self.nie.estimate))
        if gap > 1e-10 * max(1.0, abs(self.te.estimate)):
            raise ValueError(f"TE != NDE + NIE (gap {gap:.3e})")


def _effect(est: float, se: float, level: float) -> EffectEstimate:
    lo, hi, p = normal_interval(est, se, level)
    return EffectEstimate(float(est), float(se), lo, hi, p)


def mediation_from_arrays(
    outcome,
    mediator,
    exposure,
    covariates=None,
    contrast: Contrast | None = None,
    exposure_name: str = "X",
    level: float = 0.95,
    method: str = "product",
) -> MediationEffects:
    """Product- or difference-method mediation with an arbitrary exposure vector.

    This is the array-level workhorse used by the SE-MA, PC-MA and ERS-MA
    pipelines (whose exposures may be derived scores rather than dataset
    columns). ``covariates`` enter both regressions; an intercept is added
    internally.
    """
    y = np.asarray(outcome, dtype=float).ravel()
    m = np.asarray(mediator, dtype=float).ravel()
    x = np.asarray(exposure, dtype=float).ravel()
    n = y.shape[0]
    if covariates is None:
        C = np.empty((n, 0))
    else:
        C = np.asarray(covariates, dtype=float)
        if C.ndim == 1:
            C = C[:, None]
    if contrast is None:
        contrast = Contrast.unit(1)
    if contrast.delta.shape[0] != 1:
        raise ValueError("single-exposure mediation takes a scalar contrast")
    d = float(contrast.delta[0])

    ones = np.ones((n, 1))
    cov_names = [f"c{j}" for j in range(C.shape[1])]
    outcome_design = np.column_stack([ones, x, m, C])
    fit_y = ols_fit(outcome_design, y, names=["intercept", exposure_name, "M"] + cov_names)
    b_x, se_bx = fit_y.coef(exposure_name), fit_y.coef_se(exposure_name)
    b_m, se_bm = fit_y.coef("M"), fit_y.coef_se("M")

    if method == "product":
        mediator_design = np.column_stack([ones, x, C])
        fit_m = ols_fit(mediator_design, m, names=["intercept", exposure_name] + cov_names)
        a_x, se_ax = fit_m.coef(exposure_name), fit_m.coef_se(exposure_name)
        prod = delta_product_interval(a_x, se_ax, b_m, se_bm, level)
        nie_est = d * prod.estimate
        nie_se = abs(d) * prod.se
    elif method == "difference":
        total_design = np.column_stack([ones, x, C])
        fit_t = ols_fit(total_design, y, names=["intercept", exposure_name] + cov_names)
        phi_x, se_phi = fit_t.coef(exposure_name), fit_t.coef_se(exposure_name)
        nie_est = d * (phi_x - b_x)
        # Cross-fit covariance of (phi, b_x) is not available; independence
        # approximation, documented. Point estimates match the product method.
        nie_se = abs(d) * float(np.sqrt(se_phi**2 + se_bx**2))
    else:
        raise ValueError(f"unknown method {method!r}")

    nde_est = d * b_x
    nde_se = abs(d) * se_bx
    te_est = nde_est + nie_est
    te_se = float(np.sqrt(nde_se**2 + nie_se**2))
    return MediationEffects(
        te=_effect(te_est, te_se, level),
        nde=_effect(nde_est, nde_se, level),
        nie=_effect(nie_est, nie_se, level),
        contrast=contrast,
        exposure=exposure_name,
        method=method,
    )


def _resolve_columns(data: Dataset, names) -> np.ndarray:
    cols = []
    for name in names:
        if name in data.exposure_names:
            cols.append(data.exposures[:, data.exposure_names.index(name)])
        elif name in data.confounder_names:
            cols.append(data.confounders[:, data.confounder_names.index(name)])
        else:
            raise KeyError(f"column {name!r} is not an exposure or confounder")
    return np.column_stack(cols) if cols else np.empty((data.n, 0))


def product_mediation(
    data: Dataset,
    exposure: str,
    covariates=(),
    contrast: Contrast | None = None,
    level: float = 0.95,
) -> MediationEffects:
    """Product-method mediation for one named exposure column."""
    if exposure in covariates:
        raise ValueError(f"exposure {exposure!r} cannot also be a covariate")
    x = data.exposures[:, data.exposure_names.index(exposure)]
    C = _resolve_columns(data, covariates)
    return mediation_from_arrays(
        data.outcome, data.mediator, x, C, contrast, exposure, level, method="product"
    )


def difference_mediation(
    data: Dataset,
    exposure: str,
    covariates=(),
    contrast: Contrast | None = None,
    level: float = 0.95,
) -> MediationEffects:
    """Difference-method mediation; NIE identical to the product method."""
    if exposure in covariates:
        raise ValueError(f"exposure {exposure!r} cannot also be a covariate")
    x = data.exposures[:, data.exposure_names.index(exposure)]
    C = _resolve_columns(data, covariates)
    return mediation_from_arrays(
        data.outcome, data.mediator, x, C, contrast, exposure, level, method="difference"
    )


@dataclass(frozen=True)
class SemaResult:
    """Per-exposure effects, FDR flags, and the summed global NIE."""

    effects: tuple[MediationEffects, ...]
    nie_qvalues: np.ndarray
    active: np.ndarray
    global_nie: EffectEstimate
    adjusted: bool
    fdr_level: float

    @property
    def causally_interpretable(self) -> bool:
        # The unadjusted regime omits co-exposure confounding on purpose
        # (simulation benchmark); its estimates are descriptive only.
        return self.adjusted


def sema(
    data: Dataset,
    adjust_coexposures: bool = True,
    contrast: Contrast | None = None,
    fdr_level: float = 0.05,
    level: float = 0.95,
) -> SemaResult:
    """Single-exposure mediation analysis across all exposures.

    Parameters
    ----------
    adjust_coexposures : bool
        When True the remaining exposures join the confounders as
        covariates in both models (the causally interpretable regime).
    contrast : Contrast, optional
        Scalar contrast applied to every exposure; defaults to a unit shift.
    fdr_level : float
        BH threshold on NIE q-values for the active flag.
    """
    if not 0 < fdr_level < 1:
        raise ValueError(f"fdr_level must be in (0, 1), got {fdr_level}")
    if contrast is None:
        contrast = Contrast.unit(1)
    effects = []
    for j, name in enumerate(data.exposure_names):
        covs = list(data.confounder_names)
        if adjust_coexposures:
            covs += [e for e in data.exposure_names if e != name]
        effects.append(product_mediation(data, name, covs, contrast, level))
    qvals = bh_adjust([eff.nie.p for eff in effects])
    active = qvals <= fdr_level
    total = float(sum(eff.nie.estimate for eff in effects))
    total_se = float(np.sqrt(sum(eff.nie.se**2 for eff in effects)))
    return SemaResult(
        effects=tuple(effects),
        nie_qvalues=qvals,
        active=active,
        global_nie=_effect(total, total_se, level),
        adjusted=adjust_coexposures,
        fdr_level=fdr_level,
    )
