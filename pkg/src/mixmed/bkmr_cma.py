"""Causal mediation effects from three fitted BKMR models.

Requires a mediator model (kernel inputs = exposures), an outcome model
(kernel inputs = exposures plus the mediator as the last column), and a
total-effect model (kernel inputs = exposures). For each retained MCMC
iteration j:

1. draw the mediator's kernel surface at the reference exposure level and
   generate K posterior-predictive mediator samples (residual noise
   sigma_M included, so the NIE reflects mediator variability);
2. jointly draw the outcome surface at the comparative and reference
   exposure levels paired with every mediator sample;
3. average the K outcome values per arm to get this iteration's
   Y(z, M(z*)) and Y(z*, M(z*));
4. jointly draw the total-effect surface at the two exposure levels
   (no residual noise: it cancels in differences in expectation);
5. TE = Y(z) - Y(z*), NDE = Y(z, M(z*)) - Y(z*, M(z*)), NIE = TE - NDE.

Controlled direct effects are the outcome-surface differences at fixed
mediator values (default: the 0.1/0.25/0.5/0.75 training quantiles).
Fixed-effect covariates sit at a prediction profile (default: confounder
means). Iterations use per-index RNG substreams, so results do not depend
on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bkmr import BkmrFit, _chol_psd, posterior_h_conditional
from .errors import ConfigError
from .rng import SeededRng, as_seeded


@dataclass(frozen=True)
class PosteriorSummary:
    mean: float
    sd: float
    lo: float
    hi: float


def posterior_summary(samples, alpha: float = 0.05) -> PosteriorSummary:
    """Mean, sd, and equal-tailed empirical interval at level 1 - alpha.

    Quantiles use the linear-interpolation rule (numpy default), e.g.
    samples 1..100 at alpha 0.05 give (3.475, 97.525).
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("samples must be nonempty")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    lo, hi = np.quantile(x, [alpha / 2, 1 - alpha / 2])
    sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return PosteriorSummary(float(x.mean()), sd, float(lo), float(hi))


@dataclass(frozen=True)
class CmaConfig:
    """Contrast and sampling settings for the mediation algorithm."""

    a: np.ndarray
    astar: np.ndarray
    m_quantiles: tuple[float, ...] = (0.1, 0.25, 0.5, 0.75)
    m_values: tuple[float, ...] | None = None
    K: int = 50
    sel: np.ndarray | None = None
    alpha: float = 0.05
    covariate_profile: np.ndarray | None = None

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        astar = np.atleast_1d(np.asarray(self.astar, dtype=float))
        if a.shape != astar.shape:
            raise ConfigError("a and astar must have equal length")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "astar", astar)
        if self.K < 1:
            raise ConfigError("K must be at least 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must be in (0, 1)")
        if self.m_values is None:
            if any(not 0 < qq < 1 for qq in self.m_quantiles):
                raise ConfigError("mediator quantiles must lie in (0, 1)")


@dataclass(frozen=True)
class PosteriorEffects:
    """Per-iteration effect samples plus their summaries."""

    te: np.ndarray
    nde: np.ndarray
    nie: np.ndarray
    cde: dict  # label -> samples
    summaries: dict  # label -> PosteriorSummary
    alpha: float
    sel: np.ndarray


def _joint_surface_draw(fit: BkmrFit, t: int, points: np.ndarray, gen) -> np.ndarray:
    """One draw of h at the given rows from its joint Gaussian conditional."""
    uniq, inverse = np.unique(points, axis=0, return_inverse=True)
    mu, cov = posterior_h_conditional(fit, t, uniq, full_cov=True)
    if uniq.shape[0] == 1:
        h = mu + np.sqrt(max(cov[0, 0], 0.0)) * gen.standard_normal(1)
    else:
        L = _chol_psd(cov, "kernel-surface conditional covariance")
        h = mu + L @ gen.standard_normal(uniq.shape[0])
    return h[inverse]


def _check_roles(fit_m: BkmrFit, fit_y: BkmrFit, fit_te: BkmrFit, p: int):
    for fit, role in ((fit_m, "mediator"), (fit_y, "outcome"), (fit_te, "total-effect")):
        if fit.role != role:
            raise ConfigError(f"expected a {role!r} fit, got role {fit.role!r}")
    if fit_m.q != p or fit_te.q != p:
        raise ConfigError(
            f"mediator/TE models must have {p} kernel inputs, "
            f"got {fit_m.q} and {fit_te.q}"
        )
    if fit_y.q != p + 1:
        raise ConfigError(
            f"outcome model must have {p + 1} kernel inputs "
            "(exposures plus the mediator in the last column)"
        )
    if not (fit_m.X.shape[1] == fit_y.X.shape[1] == fit_te.X.shape[1]):
        raise ConfigError("the three fits disagree on confounder columns")


def mediation_bkmr(
    fit_m: BkmrFit,
    fit_y: BkmrFit,
    fit_te: BkmrFit,
    config: CmaConfig,
    rng: SeededRng | int = 0,
) -> PosteriorEffects:
    """Posterior TE/NDE/NIE (and CDEs) for the contrast astar -> a."""
    p = config.a.shape[0]
    _check_roles(fit_m, fit_y, fit_te, p)
    key = as_seeded(rng)

    T = len(fit_m.chain)
    if not (len(fit_y.chain) == len(fit_te.chain) == T):
        raise ConfigError("the three chains must have equal stored length")
    sel = fit_m.default_sel() if config.sel is None else np.asarray(config.sel, dtype=int)
    if sel.size == 0:
        raise ValueError("sel must be nonempty")
    if sel.min() < 0 or sel.max() >= T:
        raise ValueError(f"sel indices must lie in [0, {T}), got [{sel.min()}, {sel.max()}]")

    s = fit_m.X.shape[1]
    if config.covariate_profile is None:
        profile = fit_m.X.mean(axis=0) if s else np.empty(0)
    else:
        profile = np.asarray(config.covariate_profile, dtype=float).ravel()
        if profile.shape[0] != s:
            raise ConfigError(f"covariate profile needs {s} values, got {profile.shape[0]}")
    xprof = np.concatenate([[1.0], profile])

    mediator_train = fit_y.Z[:, -1]
    if config.m_values is not None:
        m_levels = [(f"cde_m={v:g}", float(v)) for v in config.m_values]
    else:
        m_levels = [
            (f"cde_q{int(round(qq * 100))}", float(np.quantile(mediator_train, qq)))
            for qq in config.m_quantiles
        ]

    K = config.K
    n_lev = len(m_levels)
    # Outcome-surface evaluation points per iteration: (a, m_k) and
    # (astar, m_k) for each mediator draw, then (a, m) and (astar, m) per
    # CDE level. Exposure rows are fixed; mediator entries filled per draw.
    zy = np.empty((2 * K + 2 * n_lev, p + 1))
    zy[:K, :p] = config.a
    zy[K : 2 * K, :p] = config.astar
    for i, (_, m_val) in enumerate(m_levels):
        zy[2 * K + 2 * i, :p] = config.a
        zy[2 * K + 2 * i, p] = m_val
        zy[2 * K + 2 * i + 1, :p] = config.astar
        zy[2 * K + 2 * i + 1, p] = m_val
    zte = np.vstack([config.a, config.astar])

    te = np.empty(sel.size)
    nde = np.empty(sel.size)
    cde = {label: np.empty(sel.size) for label, _ in m_levels}

    for i, t in enumerate(sel):
        gen = key.child(int(t)).generator()
        t = int(t)

        # Step 1: mediator draws at the reference exposure level.
        mu_m, var_m = posterior_h_conditional(fit_m, t, config.astar[None, :])
        h_m = mu_m[0] + np.sqrt(var_m[0]) * gen.standard_normal()
        mean_m = float(xprof @ fit_m.chain.beta[t]) + h_m
        sigma_m = float(np.sqrt(fit_m.chain.sigsq[t]))
        m_draws = mean_m + sigma_m * gen.standard_normal(K)

        # Steps 2-3: joint outcome-surface draw at both arms. Duplicate
        # evaluation points (e.g. a == astar) are collapsed so identical
        # inputs get identical draws and null contrasts are exactly zero.
        zy[:K, p] = m_draws
        zy[K : 2 * K, p] = m_draws
        h_y = _joint_surface_draw(fit_y, t, zy, gen)
        base_y = float(xprof @ fit_y.chain.beta[t])
        y_a = base_y + float(h_y[:K].mean())
        y_astar = base_y + float(h_y[K : 2 * K].mean())

        # Step 4: joint total-effect surface draw.
        h_te = _joint_surface_draw(fit_te, t, zte, gen)

        # Step 5.
        te[i] = h_te[0] - h_te[1]
        nde[i] = y_a - y_astar
        for j, (label, _) in enumerate(m_levels):
            cde[label][i] = h_y[2 * K + 2 * j] - h_y[2 * K + 2 * j + 1]

    nie = te - nde
    summaries = {
        "te": posterior_summary(te, config.alpha),
        "nde": posterior_summary(nde, config.alpha),
        "nie": posterior_summary(nie, config.alpha),
    }
    for label, samp in cde.items():
        summaries[label] = posterior_summary(samp, config.alpha)
    return PosteriorEffects(
        te=te,
        nde=nde,
        nie=nie,
        cde=cde,
        summaries=summaries,
        alpha=config.alpha,
        sel=sel,
    )
