"""Principal-component mediation analysis.

PCA is always run on the correlation scale (columns standardized first),
via SVD of the standardized exposure matrix. Retained component scores
replace the exposures in the mediation models: each retained PC is analyzed
with the other retained PCs and the confounders as covariates, and the
global NIE for a joint unit shift is the sum of the per-PC NIEs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Contrast, Dataset, standardize
from .linmod import normal_interval
from .mediate import EffectEstimate, MediationEffects, mediation_from_arrays


@dataclass(frozen=True)
class PcaModel:
    """Correlation-scale PCA of an exposure matrix.

    ``loadings`` columns are unit-norm PCs with a deterministic sign
    convention (the largest-magnitude entry of each loading is positive);
    ``scores = standardized(X) @ loadings``; eigenvalues sum to p.
    """

    loadings: np.ndarray
    eigenvalues: np.ndarray
    scores: np.ndarray
    means: np.ndarray
    sds: np.ndarray

    @property
    def variance_explained(self) -> np.ndarray:
        return self.eigenvalues / self.eigenvalues.sum()

    @property
    def cumulative_variance(self) -> np.ndarray:
        return np.cumsum(self.variance_explained)


def pca(X: np.ndarray, names=None) -> PcaModel:
    """PCA of X on the correlation scale with deterministic signs."""
    Z, means, sds = standardize(X, names)
    n, p = Z.shape
    # Eigendecomposition of the correlation matrix: always yields a full
    # p x p orthonormal loading basis, also when n - 1 < p.
    corr = (Z.T @ Z) / (n - 1)
    w, V = np.linalg.eigh(0.5 * (corr + corr.T))
    order = np.argsort(-w, kind="stable")
    eigenvalues = np.maximum(w[order], 0.0)
    loadings = V[:, order]
    for j in range(p):
        col = loadings[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            loadings[:, j] = -col
    scores = Z @ loadings
    return PcaModel(
        loadings=loadings,
        eigenvalues=eigenvalues,
        scores=scores,
        means=means,
        sds=sds,
    )


def select_components(model: PcaModel, rule: str, value=None) -> int:
    """Number of PCs to retain.

    rule = "cum_variance": smallest l whose cumulative variance proportion
    reaches ``value`` (0 < value <= 1). rule = "first_k": exactly ``value``
    components. rule = "kaiser": count of eigenvalues > 1.
    """
    p = model.eigenvalues.size
    if rule == "cum_variance":
        theta = float(value if value is not None else 0.80)
        if not 0 < theta <= 1:
            raise ValueError(f"cum_variance threshold must be in (0, 1], got {theta}")
        cum = model.cumulative_variance
        return int(np.argmax(cum >= theta - 1e-12) + 1)
    if rule == "first_k":
        if value is None:
            raise ValueError("first_k rule requires a component count")
        k = int(value)
        if not 1 <= k <= p:
            raise ValueError(f"first_k must be in [1, {p}], got {k}")
        return k
    if rule == "kaiser":
        return max(int(np.sum(model.eigenvalues > 1.0)), 1)
    raise ValueError(f"unknown retention rule {rule!r}")


@dataclass(frozen=True)
class PcmaResult:
    model: PcaModel
    retained: int
    effects: tuple[MediationEffects, ...]
    global_nie: EffectEstimate


def pcma(
    data: Dataset,
    rule: str = "cum_variance",
    value=None,
    contrast: Contrast | None = None,
    level: float = 0.95,
) -> PcmaResult:
    """PC-MA: mediation with retained PC scores as exposures.

    Each retained PC j is analyzed by the product method with covariates =
    confounders + the other retained PC scores. The global NIE sums the
    per-PC effects for a joint unit shift, with variance summed under the
    independence approximation (score columns are orthogonal in sample).
    """
    model = pca(data.exposures, data.exposure_names)
    retained = select_components(model, rule, value)
    if contrast is None:
        contrast = Contrast.unit(1)
    effects = []
    for j in range(retained):
        others = [k for k in range(retained) if k != j]
        covs = np.column_stack([data.confounders, model.scores[:, others]])
        effects.append(
            mediation_from_arrays(
                data.outcome,
                data.mediator,
                model.scores[:, j],
                covs,
                contrast,
                exposure_name=f"PC{j + 1}",
                level=level,
                method="product",
            )
        )
    total = float(sum(eff.nie.estimate for eff in effects))
    total_se = float(np.sqrt(sum(eff.nie.se**2 for eff in effects)))
    lo, hi, p = normal_interval(total, total_se, level)
    return PcmaResult(
        model=model,
        retained=retained,
        effects=tuple(effects),
        global_nie=EffectEstimate(total, total_se, lo, hi, p),
    )
