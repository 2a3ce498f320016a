"""Environmental risk score construction and mediation.

The ERS pipeline: split the data into equal train/analysis halves, fit an
elastic net for the outcome on the training half (exposure features
penalized, confounders unpenalized), tune the two penalties by five-fold
cross-validation (100 log-spaced ridge penalties on [1e-4, 1e2], lasso path
per ridge value), relax the lasso penalty until at least three distinct
exposures are selected, score the analysis half, and run product-method
mediation with the score as the single exposure.

The solver minimizes

    sum_i (y_i - Z_i b)^2 + lambda1 * sum_j pf_j |b_j| + lambda2 * sum_j pf_j b_j^2

by cyclic coordinate descent on the Gram matrix, with an unpenalized
intercept handled through response centering (feature columns must be
standardized). Convergence requires both a sup-norm coefficient change
below ``coef_tol`` and KKT residuals below ``kkt_tol``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Contrast, Dataset, split_indices, standardize
from .errors import ConvergenceError, ConfigError, DegenerateScoreError
from .mediate import MediationEffects, mediation_from_arrays
from .rng import SeededRng, as_seeded

FEATURE_SPECS = ("main", "main+interactions")


def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _check_standardized(Z: np.ndarray) -> None:
    means = np.abs(Z.mean(axis=0))
    scale = np.abs(Z).max(axis=0) + 1.0
    if np.any(means > 1e-7 * scale):
        j = int(np.argmax(means / scale))
        raise ValueError(
            f"feature column {j} is not centered (mean {Z[:, j].mean():.3g}); "
            "standardize features before fitting"
        )


@dataclass(frozen=True)
class EnetFit:
    coef: np.ndarray
    intercept: float
    sweeps: int
    kkt_residual: float

    def objective(self, Z, y, lambda1, lambda2, penalty_factors) -> float:
        r = y - self.intercept - Z @ self.coef
        pf = np.asarray(penalty_factors, dtype=float)
        return float(
            r @ r
            + lambda1 * np.sum(pf * np.abs(self.coef))
            + lambda2 * np.sum(pf * self.coef**2)
        )


def _kkt_residual(grad, beta, lambda1, lambda2, pf) -> float:
    # grad_j = Z_j' (y_c - Z beta); stationarity of the full objective.
    worst = 0.0
    for j in range(beta.size):
        g = -2.0 * grad[j] + 2.0 * lambda2 * pf[j] * beta[j]
        if beta[j] != 0.0 or pf[j] == 0.0:
            v = abs(g + lambda1 * pf[j] * np.sign(beta[j]))
        else:
            v = max(0.0, abs(g) - lambda1 * pf[j])
        worst = max(worst, v)
    return worst


def elastic_net(
    Z,
    y,
    lambda1: float,
    lambda2: float,
    penalty_factors,
    *,
    coef_tol: float = 1e-7,
    kkt_tol: float = 1e-6,
    zero_tol: float = 1e-12,
    max_sweeps: int = 100_000,
    warm_start=None,
) -> EnetFit:
    """Penalized least squares by cyclic coordinate descent.

    Feature columns must be standardized; the intercept is unpenalized and
    recovered as the response mean. Raises :class:`ConvergenceError` with
    diagnostics if the sweep budget is exhausted.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    pf = np.asarray(penalty_factors, dtype=float).ravel()
    k = Z.shape[1]
    if pf.shape[0] != k:
        raise ValueError(f"penalty_factors length {pf.shape[0]} != {k} features")
    if np.any(pf < 0) or lambda1 < 0 or lambda2 < 0:
        raise ValueError("penalties and penalty factors must be nonnegative")
    _check_standardized(Z)

    intercept = float(y.mean())
    yc = y - intercept
    G = Z.T @ Z
    q = Z.T @ yc
    denom = np.diag(G) + lambda2 * pf
    if np.any(denom <= 0):
        raise ValueError("zero-variance feature column")
    thresh = 0.5 * lambda1 * pf

    beta = np.zeros(k) if warm_start is None else np.array(warm_start, dtype=float)
    grad = q - G @ beta

    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        max_change = 0.0
        for j in range(k):
            bj = beta[j]
            c = grad[j] + G[j, j] * bj
            bnew = _soft(c, thresh[j]) / denom[j]
            if bnew != bj:
                grad -= G[:, j] * (bnew - bj)
                beta[j] = bnew
                change = abs(bnew - bj)
                if change > max_change:
                    max_change = change
        if max_change < coef_tol:
            # Clip float-boundary coefficients to exact zeros before the
            # KKT check (threshold-equality cases land at ~1e-16).
            tiny = (beta != 0.0) & (np.abs(beta) < zero_tol) & (pf > 0)
            if np.any(tiny):
                beta[tiny] = 0.0
                grad = q - G @ beta
            kkt = _kkt_residual(grad, beta, lambda1, lambda2, pf)
            if kkt <= kkt_tol:
                return EnetFit(beta, intercept, sweeps, kkt)
    kkt = _kkt_residual(grad, beta, lambda1, lambda2, pf)
    raise ConvergenceError(
        f"coordinate descent did not converge in {max_sweeps} sweeps "
        f"(last change {max_change:.3e}, KKT residual {kkt:.3e})"
    )


def lambda1_max(Z, y, penalty_factors) -> float:
    """Smallest lambda1 that zeroes every penalized coefficient (any lambda2)."""
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    pf = np.asarray(penalty_factors, dtype=float).ravel()
    yc = y - y.mean()
    free = np.flatnonzero(pf == 0)
    resid = yc
    if free.size:
        Zf = Z[:, free]
        coef, *_ = np.linalg.lstsq(Zf, yc, rcond=None)
        resid = yc - Zf @ coef
    pen = pf > 0
    if not np.any(pen):
        return 0.0
    grads = 2.0 * np.abs(Z[:, pen].T @ resid) / pf[pen]
    return float(grads.max())


def lambda1_path(lmax: float, n_points: int = 100, decades: float = 4.0) -> np.ndarray:
    """Geometric lasso path from lambda1_max down ``decades`` orders of magnitude."""
    if lmax <= 0:
        return np.zeros(n_points)
    return np.geomspace(lmax, lmax * 10.0 ** (-decades), n_points)


def _batch_lasso_paths(G, q, lambda2_grid, pf, lam1_grid, tol=1e-6, max_iter=5000):
    """Solution paths for the whole lambda2 grid in lockstep.

    Solves, for every (lambda2_i, lambda1_t) on the grid, the same
    Gram-space problem as :func:`elastic_net`, warm-starting along the
    lambda1 path. Uses accelerated proximal gradient steps so one BLAS
    matmul advances all lambda2 problems at once; for lambda2 > 0 the
    objective is strictly convex and the optimum matches coordinate
    descent. Returns coefficients with shape (n_lam1, n_lam2, k).
    """
    m = lambda2_grid.size
    k = q.size
    lip = 2.0 * float(np.linalg.eigvalsh(G)[-1]) + 2.0 * lambda2_grid * pf.max()
    eta = 1.0 / lip  # (m,) per-problem step sizes
    ridge = 2.0 * np.outer(pf, lambda2_grid)  # (k, m)
    B = np.zeros((k, m))
    out = np.empty((lam1_grid.size, m, k))
    q2 = 2.0 * q[:, None]
    for t, lam1 in enumerate(lam1_grid):
        thresh = lam1 * np.outer(pf, eta)  # (k, m) prox thresholds
        V = B.copy()
        t_mom = 1.0
        for it in range(max_iter):
            grad = 2.0 * (G @ V) - q2 + ridge * V
            U = V - eta[None, :] * grad
            Bnew = np.abs(U)
            Bnew -= thresh
            np.maximum(Bnew, 0.0, out=Bnew)
            np.copysign(Bnew, U, out=Bnew)
            chg = float(np.abs(Bnew - B).max())
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
            V = Bnew + ((t_mom - 1.0) / t_next) * (Bnew - B)
            B, t_mom = Bnew, t_next
            if chg < tol:
                break
        out[t] = B.T
    return out


@dataclass(frozen=True)
class TuneResult:
    lambda1: float
    lambda2: float
    lambda1_grid: np.ndarray
    lambda2_grid: np.ndarray
    cv_mse: np.ndarray  # (n_lambda1, n_lambda2)


def cv_tune(
    Z,
    y,
    penalty_factors,
    rng,
    *,
    n_folds: int = 5,
    n_lambda2: int = 100,
    lambda2_bounds: tuple[float, float] = (1e-4, 1e2),
    n_lambda1: int = 100,
    lambda1_decades: float = 4.0,
) -> TuneResult:
    """Pick (lambda1, lambda2) minimizing K-fold cross-validated MSE.

    The lambda2 grid is log-spaced on ``lambda2_bounds``; for each lambda2
    the solver's geometric lambda1 path (computed once from the full data)
    is evaluated, and the global (lambda1, lambda2) minimizer is returned.
    Folds are a seeded permutation split and identical for every grid point.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    pf = np.asarray(penalty_factors, dtype=float).ravel()
    n = y.shape[0]
    if n < 2 * n_folds:
        raise ValueError(f"cross-validation needs n >= {2 * n_folds}, got {n}")
    _check_standardized(Z)

    lam2_grid = np.geomspace(lambda2_bounds[0], lambda2_bounds[1], n_lambda2)
    lam1_grid = lambda1_path(lambda1_max(Z, y, pf), n_lambda1, lambda1_decades)

    gen = as_seeded(rng).generator() if not isinstance(rng, np.random.Generator) else rng
    perm = gen.permutation(n)
    fold_ids = np.empty(n, dtype=int)
    for f, chunk in enumerate(np.array_split(perm, n_folds)):
        fold_ids[chunk] = f

    sse = np.zeros((lam1_grid.size, lam2_grid.size))
    for f in range(n_folds):
        val = fold_ids == f
        Zt, yt = Z[~val], y[~val]
        Zv, yv = Z[val], y[val]
        mu = float(yt.mean())
        G = Zt.T @ Zt
        q = Zt.T @ (yt - mu)
        paths = _batch_lasso_paths(G, q, lam2_grid, pf, lam1_grid)
        resid0 = yv - mu
        for t in range(lam1_grid.size):
            pred = Zv @ paths[t].T  # (n_val, n_lambda2)
            err = resid0[:, None] - pred
            sse[t] += np.sum(err * err, axis=0)
    cv_mse = sse / n
    t_best, i_best = np.unravel_index(np.argmin(cv_mse), cv_mse.shape)
    return TuneResult(
        lambda1=float(lam1_grid[t_best]),
        lambda2=float(lam2_grid[i_best]),
        lambda1_grid=lam1_grid,
        lambda2_grid=lam2_grid,
        cv_mse=cv_mse,
    )


@dataclass(frozen=True)
class ErsModel:
    """Fitted risk-score model: feature transforms plus penalized coefficients."""

    feature_spec: str
    exposure_names: tuple[str, ...]
    feature_names: tuple[str, ...]
    feature_parents: tuple[tuple[int, ...], ...]  # exposure indices behind each feature
    coef: np.ndarray  # features first, then confounders
    intercept: float
    feature_means: np.ndarray
    feature_sds: np.ndarray
    lambda1: float
    lambda2: float
    n_confounders: int
    train_rows: tuple[int, ...] = field(default=())
    seed: int | None = None
    tuning: dict | None = None  # CV grid spec the lambdas came from

    @property
    def selected_exposures(self) -> tuple[str, ...]:
        picked = set()
        nf = len(self.feature_names)
        for j in range(nf):
            if self.coef[j] != 0.0:
                picked.update(self.feature_parents[j])
        return tuple(self.exposure_names[i] for i in sorted(picked))

    def to_json(self, path) -> None:
        payload = {
            "feature_spec": self.feature_spec,
            "exposure_names": list(self.exposure_names),
            "feature_names": list(self.feature_names),
            "feature_parents": [list(t) for t in self.feature_parents],
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "feature_means": self.feature_means.tolist(),
            "feature_sds": self.feature_sds.tolist(),
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "n_confounders": self.n_confounders,
            "train_rows": list(self.train_rows),
            "seed": self.seed,
            "tuning": self.tuning,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path) -> "ErsModel":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        return cls(
            feature_spec=d["feature_spec"],
            exposure_names=tuple(d["exposure_names"]),
            feature_names=tuple(d["feature_names"]),
            feature_parents=tuple(tuple(t) for t in d["feature_parents"]),
            coef=np.array(d["coef"]),
            intercept=float(d["intercept"]),
            feature_means=np.array(d["feature_means"]),
            feature_sds=np.array(d["feature_sds"]),
            lambda1=float(d["lambda1"]),
            lambda2=float(d["lambda2"]),
            n_confounders=int(d["n_confounders"]),
            train_rows=tuple(d["train_rows"]),
            seed=d["seed"],
            tuning=d.get("tuning"),
        )


def build_feature_matrix(X: np.ndarray, names, spec: str):
    """Raw exposure features for a spec: mains, plus squares and pairwise products."""
    if spec not in FEATURE_SPECS:
        raise ConfigError(f"feature_spec must be one of {FEATURE_SPECS}, got {spec!r}")
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    cols = [X[:, j] for j in range(p)]
    fnames = list(names)
    parents: list[tuple[int, ...]] = [(j,) for j in range(p)]
    if spec == "main+interactions":
        for j in range(p):
            cols.append(X[:, j] ** 2)
            fnames.append(f"{names[j]}^2")
            parents.append((j,))
        for j in range(p):
            for l in range(j + 1, p):
                cols.append(X[:, j] * X[:, l])
                fnames.append(f"{names[j]}*{names[l]}")
                parents.append((j, l))
    return np.column_stack(cols), tuple(fnames), tuple(parents)


def build_ers(model: ErsModel, X_analysis: np.ndarray) -> np.ndarray:
    """Score new exposure rows with a fitted model (training transforms applied).

    Confounder coefficients are excluded: the score is the penalized
    exposure-feature combination only.
    """
    F, fnames, _ = build_feature_matrix(
        X_analysis, model.exposure_names, model.feature_spec
    )
    if fnames != model.feature_names:
        raise ConfigError("feature spec mismatch between model and scoring data")
    Fz = (F - model.feature_means) / model.feature_sds
    nf = len(model.feature_names)
    return Fz @ model.coef[:nf]


def fit_ers_model(
    train: Dataset,
    feature_spec: str,
    rng,
    *,
    min_exposures: int = 3,
    relax_factor: float = 0.9,
    max_relax_steps: int = 200,
    seed: int | None = None,
    train_rows=(),
    cv_kwargs: dict | None = None,
) -> ErsModel:
    """Tune and fit the elastic net on the training half.

    If fewer than ``min_exposures`` distinct exposures have any nonzero
    feature at the tuned penalties, lambda1 is shrunk by ``relax_factor``
    per step until the constraint holds (bounded, then ConvergenceError).
    """
    F_raw, fnames, parents = build_feature_matrix(
        train.exposures, train.exposure_names, feature_spec
    )
    Fz, fmeans, fsds = standardize(F_raw, fnames)
    if train.s:
        Cz, _, _ = standardize(train.confounders, train.confounder_names)
    else:
        Cz = np.empty((train.n, 0))
    Z = np.column_stack([Fz, Cz])
    pf = np.concatenate([np.ones(Fz.shape[1]), np.zeros(Cz.shape[1])])

    cv_kwargs = cv_kwargs or {}
    tune = cv_tune(Z, train.outcome, pf, rng, **cv_kwargs)
    lam1, lam2 = tune.lambda1, tune.lambda2
    tuning_spec = {
        "n_lambda1": cv_kwargs.get("n_lambda1", 100),
        "lambda1_decades": cv_kwargs.get("lambda1_decades", 4.0),
        "n_lambda2": cv_kwargs.get("n_lambda2", 100),
        "lambda2_bounds": list(cv_kwargs.get("lambda2_bounds", (1e-4, 1e2))),
        "n_folds": cv_kwargs.get("n_folds", 5),
    }

    n_exposures = min(min_exposures, train.p)
    fit = elastic_net(Z, train.outcome, lam1, lam2, pf)
    for _ in range(max_relax_steps):
        picked = set()
        for j in range(len(fnames)):
            if fit.coef[j] != 0.0:
                picked.update(parents[j])
        if len(picked) >= n_exposures:
            break
        lam1 *= relax_factor
        fit = elastic_net(Z, train.outcome, lam1, lam2, pf, warm_start=fit.coef)
    else:
        raise ConvergenceError(
            f"lambda1 relaxation did not reach {n_exposures} selected exposures "
            f"within {max_relax_steps} steps"
        )

    return ErsModel(
        feature_spec=feature_spec,
        exposure_names=train.exposure_names,
        feature_names=fnames,
        feature_parents=parents,
        coef=fit.coef,
        intercept=fit.intercept,
        feature_means=fmeans,
        feature_sds=fsds,
        lambda1=lam1,
        lambda2=lam2,
        n_confounders=Cz.shape[1],
        train_rows=tuple(int(i) for i in train_rows),
        seed=seed,
        tuning=tuning_spec,
    )


@dataclass(frozen=True)
class ErsmaResult:
    model: ErsModel
    scores: np.ndarray
    contrast: Contrast
    effects: MediationEffects


def ersma(
    data: Dataset,
    feature_spec: str = "main",
    rng: SeededRng | int = 0,
    contrast: Contrast | str = "iqr",
    level: float = 0.95,
    cv_kwargs: dict | None = None,
) -> ErsmaResult:
    """ERS-based mediation analysis with split-sample scoring.

    The default contrast shifts the score from its 25th to its 75th
    percentile in the analysis half; pass a :class:`Contrast` for custom
    levels.
    """
    key = as_seeded(rng)
    train_rows, analysis_rows = split_indices(data.n, key.child(0))
    train, analysis = data.subset(train_rows), data.subset(analysis_rows)
    model = fit_ers_model(
        train,
        feature_spec,
        key.child(1),
        seed=key.seed,
        train_rows=train_rows,
        cv_kwargs=cv_kwargs,
    )
    scores = build_ers(model, analysis.exposures)
    if np.std(scores) == 0.0:
        raise DegenerateScoreError("ERS is constant on the analysis split")
    if contrast == "iqr":
        contrast = Contrast(
            np.array([np.quantile(scores, 0.25)]), np.array([np.quantile(scores, 0.75)])
        )
    elif not isinstance(contrast, Contrast):
        raise ConfigError(f"contrast must be 'iqr' or a Contrast, got {contrast!r}")
    effects = mediation_from_arrays(
        analysis.outcome,
        analysis.mediator,
        scores,
        analysis.confounders,
        contrast,
        exposure_name="ERS",
        level=level,
        method="product",
    )
    return ErsmaResult(model=model, scores=scores, contrast=contrast, effects=effects)
