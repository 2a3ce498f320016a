"""Bayesian kernel machine regression with spike-and-slab selection.

Model
-----
    y_i = h(Z_i) + x_i' beta + eps_i,     eps_i ~ N(0, sigma^2)
    h ~ N(0, tau * K_r),  K_r[i,j] = exp(-sum_k r_k (Z_ik - Z_jk)^2)

with lambda = tau / sigma^2, a flat prior on beta, a Gamma prior on
1/sigma^2, a Gamma(1, 0.1) prior on lambda, and per-input kernel weights
r_k >= 0 under a spike-and-slab prior: r_k = 0 with probability 1 - pi,
else r_k ~ Uniform(0, slab_upper). Hierarchical selection groups the
inputs and allows at most one active input per group at a time.

Sampler
-------
Metropolis-within-Gibbs on the marginal likelihood with h, beta and
sigma^2 integrated out analytically:

    log m(lambda, r) = -1/2 log|V| - 1/2 log|X'V^{-1}X|
                       - (a + (n - p)/2) log(b + RSS_V / 2),
    V = I + lambda K_r,

so inclusion moves pay the usual Occam penalty automatically. Per
iteration every group gets one move (birth with an exponential proposal,
death, log-scale random-walk refinement of the active weight, and a swap
move inside multi-member groups), lambda gets a log-scale random walk,
and (sigma^2, beta) are drawn exactly from their conditional posterior.
Chains are bit-reproducible under a SeededRng key.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.linalg import cholesky, solve_triangular
from scipy.spatial.distance import squareform

from .errors import NumericalError
from .rng import SeededRng, as_seeded

SELECTION_MODES = ("none", "componentwise", "hierarchical")
JITTERS = (0.0, 1e-8, 1e-6)


def gaussian_kernel(zi, zj, r) -> float:
    """Weighted Gaussian kernel exp(-sum_k r_k (z_ik - z_jk)^2)."""
    zi = np.asarray(zi, dtype=float).ravel()
    zj = np.asarray(zj, dtype=float).ravel()
    r = np.asarray(r, dtype=float).ravel()
    if not zi.shape == zj.shape == r.shape:
        raise ValueError(
            f"dimension mismatch: zi {zi.shape}, zj {zj.shape}, r {r.shape}"
        )
    if np.any(r < 0):
        raise ValueError("kernel weights must be nonnegative")
    return float(np.exp(-np.sum(r * (zi - zj) ** 2)))


def _cross_kernel(Za, Zb, r) -> np.ndarray:
    """Kernel matrix between row sets, same weighting as gaussian_kernel."""
    diff = Za[:, None, :] - Zb[None, :, :]
    return np.exp(-np.einsum("abk,k->ab", diff * diff, r))


def cluster_groups(corr: np.ndarray, k: int) -> np.ndarray:
    """Complete-linkage clustering of inputs on distance 1 - correlation.

    Returns 0-based group labels (ordered by first appearance), suitable for
    :class:`KernelConfig.groups`.
    """
    corr = np.asarray(corr, dtype=float)
    p = corr.shape[0]
    if corr.ndim != 2 or corr.shape != (p, p):
        raise ValueError("correlation matrix must be square")
    if not np.allclose(corr, corr.T, atol=1e-8):
        raise ValueError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-8):
        raise ValueError("correlation matrix must have a unit diagonal")
    if not 1 <= k <= p:
        raise ValueError(f"group count must be in [1, {p}], got {k}")
    if k == p:
        return np.arange(p)
    dist = 1.0 - 0.5 * (corr + corr.T)
    np.fill_diagonal(dist, 0.0)
    condensed = squareform(np.maximum(dist, 0.0), checks=False)
    labels = fcluster(linkage(condensed, method="complete"), t=k, criterion="maxclust")
    remap, out = {}, np.empty(p, dtype=int)
    for i, lab in enumerate(labels):
        out[i] = remap.setdefault(lab, len(remap))
    return out


@dataclass(frozen=True)
class KernelConfig:
    """Sampler configuration; defaults follow common kernel-machine practice."""

    iterations: int = 2000
    selection: str = "componentwise"
    groups: tuple[int, ...] | None = None
    prior_inclusion: float = 0.5
    slab_upper: float = 100.0
    lambda_shape: float = 1.0
    lambda_rate: float = 0.1
    sigsq_shape: float = 1e-3
    sigsq_rate: float = 1e-3
    r_jump: float = 0.3
    r_proposal_mean: float = 1.0
    lambda_jump: float = 0.5
    r_init: float = 1.0
    lambda_init: float = 10.0
    thin: int = 1
    est_h: bool = False

    def __post_init__(self):
        if self.iterations < 100:
            raise ValueError("iterations must be at least 100")
        if self.selection not in SELECTION_MODES:
            raise ValueError(f"selection must be one of {SELECTION_MODES}")
        if not 0 < self.prior_inclusion < 1:
            raise ValueError("prior_inclusion must be in (0, 1)")
        if self.slab_upper <= 0 or self.r_proposal_mean <= 0:
            raise ValueError("slab_upper and r_proposal_mean must be positive")
        if self.thin < 1 or self.iterations // self.thin < 2:
            raise ValueError("thin leaves fewer than 2 stored iterations")
        if self.groups is not None:
            object.__setattr__(self, "groups", tuple(int(g) for g in self.groups))


@dataclass(frozen=True)
class McmcChain:
    """Stored posterior draws; one row per retained (thinned) iteration."""

    r: np.ndarray  # (T, q)
    delta: np.ndarray  # (T, q) 0/1
    omega: np.ndarray | None  # (T, g) 0/1, hierarchical only
    beta: np.ndarray  # (T, p) fixed effects incl. intercept
    sigsq: np.ndarray  # (T,)
    lam: np.ndarray  # (T,)
    h: np.ndarray | None  # (T, n) when est_h
    acceptance: dict

    def __len__(self) -> int:
        return self.r.shape[0]

    @property
    def tau(self) -> np.ndarray:
        return self.lam * self.sigsq


@dataclass(frozen=True)
class BkmrFit:
    """Sampled model plus the training data it conditions on."""

    chain: McmcChain
    y: np.ndarray
    Z: np.ndarray
    X: np.ndarray  # confounders without intercept (may have 0 columns)
    config: KernelConfig
    seed: tuple
    role: str = "outcome"
    z_names: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def q(self) -> int:
        return self.Z.shape[1]

    def design(self) -> np.ndarray:
        return np.column_stack([np.ones(self.n), self.X])

    def default_sel(self) -> np.ndarray:
        """Retained iterations: second half of the stored chain."""
        T = len(self.chain)
        return np.arange(T // 2, T)

    def save_json(self, path) -> None:
        c = self.chain
        payload = {
            "role": self.role,
            "seed": list(self.seed),
            "z_names": list(self.z_names),
            "y": self.y.tolist(),
            "Z": self.Z.tolist(),
            "X": self.X.tolist(),
            "config": {
                k: (list(v) if isinstance(v, tuple) else v)
                for k, v in vars(self.config).items()
            },
            "chain": {
                "r": c.r.tolist(),
                "delta": c.delta.tolist(),
                "omega": None if c.omega is None else c.omega.tolist(),
                "beta": c.beta.tolist(),
                "sigsq": c.sigsq.tolist(),
                "lam": c.lam.tolist(),
                "h": None if c.h is None else c.h.tolist(),
                "acceptance": c.acceptance,
            },
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)

    @classmethod
    def load_json(cls, path) -> "BkmrFit":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        cfg = dict(d["config"])
        if cfg.get("groups") is not None:
            cfg["groups"] = tuple(cfg["groups"])
        c = d["chain"]
        n = len(d["y"])
        chain = McmcChain(
            r=np.array(c["r"]),
            delta=np.array(c["delta"], dtype=np.int8),
            omega=None if c["omega"] is None else np.array(c["omega"], dtype=np.int8),
            beta=np.array(c["beta"]),
            sigsq=np.array(c["sigsq"]),
            lam=np.array(c["lam"]),
            h=None if c["h"] is None else np.array(c["h"]),
            acceptance=c["acceptance"],
        )
        return cls(
            chain=chain,
            y=np.array(d["y"]),
            Z=np.array(d["Z"]),
            X=np.array(d["X"]).reshape(n, -1),
            config=KernelConfig(**cfg),
            seed=tuple(d["seed"]),
            role=d["role"],
            z_names=tuple(d["z_names"]),
        )


def _chol_psd(A: np.ndarray, what: str) -> np.ndarray:
    """Lower Cholesky with escalating diagonal jitter (1e-8 then 1e-6)."""
    scale = max(float(np.max(np.diag(A))), 1.0)
    for jit in JITTERS:
        try:
            return cholesky(A + jit * scale * np.eye(A.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(f"{what}: matrix not positive definite after jitter escalation")


class _Marginal:
    """Marginal log-likelihood cache for one (lambda, K) state."""

    __slots__ = ("logml", "L", "W", "u", "LM", "rss")

    def __init__(self, lam, K, Xd, y, a_sig, b_sig):
        n, p = Xd.shape
        V = lam * K
        V[np.diag_indices_from(V)] += 1.0
        try:
            L = cholesky(V, lower=True)
        except np.linalg.LinAlgError:
            L = _chol_psd(V, "mixed-model covariance")
        W = solve_triangular(L, Xd, lower=True)
        u = solve_triangular(L, y, lower=True)
        M = W.T @ W
        LM = _chol_psd(M, "fixed-effect information")
        wu = solve_triangular(LM, W.T @ u, lower=True)
        rss = float(u @ u - wu @ wu)
        logdet_v = 2.0 * float(np.sum(np.log(np.diag(L))))
        logdet_m = 2.0 * float(np.sum(np.log(np.diag(LM))))
        self.logml = (
            -0.5 * logdet_v
            - 0.5 * logdet_m
            - (a_sig + 0.5 * (n - p)) * np.log(b_sig + 0.5 * rss)
        )
        self.L, self.W, self.u, self.LM, self.rss = L, W, u, LM, rss


def _component_sqdist(Z: np.ndarray, k: int) -> np.ndarray:
    z = Z[:, k]
    d = z[:, None] - z[None, :]
    return d * d


def kmbayes(
    y,
    Z,
    X=None,
    config: KernelConfig | None = None,
    rng: SeededRng | int = 0,
    role: str = "outcome",
    z_names=None,
) -> BkmrFit:
    """Run the BKMR sampler.

    Parameters
    ----------
    y : (n,) response.
    Z : (n, q) kernel inputs (exposures, plus the mediator for outcome models).
    X : (n, s) fixed-effect covariates; an intercept column is added
        internally.
    config : KernelConfig
        Iterations, selection mode, priors, proposal scales.
    rng : SeededRng or int
        Chain key; identical key and config reproduce the chain bit for bit.
    """
    y = np.asarray(y, dtype=float).ravel()
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    n, q = Z.shape
    if y.shape[0] != n:
        raise ValueError(f"y has {y.shape[0]} rows, Z has {n}")
    if X is None:
        X = np.empty((n, 0))
    else:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != n:
            raise ValueError(f"X has {X.shape[0]} rows, Z has {n}")
    config = config or KernelConfig()
    if z_names is None:
        z_names = tuple(f"z{k + 1}" for k in range(q))

    if config.selection == "hierarchical":
        if config.groups is None:
            raise ValueError("hierarchical selection requires group labels")
        groups = np.asarray(config.groups, dtype=int)
        if groups.shape[0] != q:
            raise ValueError(f"groups length {groups.shape[0]} != {q} kernel inputs")
        labels = sorted(set(groups.tolist()))
        members = [np.flatnonzero(groups == g) for g in labels]
    elif config.selection == "componentwise":
        members = [np.array([k]) for k in range(q)]
    else:
        members = []
    n_groups = len(members)

    Xd = np.column_stack([np.ones(n), X])
    a_sig, b_sig = config.sigsq_shape, config.sigsq_rate
    pi = config.prior_inclusion
    mu_prop = config.r_proposal_mean
    slab = config.slab_upper
    log_f1 = -np.log(slab)
    log_odds_in = np.log(pi) - np.log(1.0 - pi)

    gen = as_seeded(rng).generator()

    # State.
    if config.selection == "none":
        r = np.full(q, config.r_init)
    else:
        r = np.zeros(q)
    active = [-1] * n_groups  # active member per group, -1 when empty
    lam = config.lambda_init
    S = np.zeros((n, n))
    for k in range(q):
        if r[k] > 0:
            S += r[k] * _component_sqdist(Z, k)
    state = _Marginal(lam, np.exp(-S), Xd, y, a_sig, b_sig)

    def log_exp_pdf(x):
        return -np.log(mu_prop) - x / mu_prop

    n_store = config.iterations // config.thin
    rec_r = np.empty((n_store, q))
    rec_delta = np.empty((n_store, q), dtype=np.int8)
    rec_omega = (
        np.empty((n_store, n_groups), dtype=np.int8)
        if config.selection == "hierarchical"
        else None
    )
    rec_beta = np.empty((n_store, Xd.shape[1]))
    rec_sigsq = np.empty(n_store)
    rec_lam = np.empty(n_store)
    rec_h = np.empty((n_store, n)) if config.est_h else None
    acc = {
        m: [0, 0] for m in ("r_birth", "r_death", "r_refine", "r_swap", "lambda")
    }

    def try_move(move, new_r_k, k, extra_log_ratio):
        """Generic accept/reject for a kernel-weight move on component k."""
        nonlocal S, state
        acc[move][1] += 1
        S_new = S + (new_r_k - r[k]) * _component_sqdist(Z, k)
        np.maximum(S_new, 0.0, out=S_new)
        cand = _Marginal(lam, np.exp(-S_new), Xd, y, a_sig, b_sig)
        if np.log(gen.uniform()) < cand.logml - state.logml + extra_log_ratio:
            acc[move][0] += 1
            S, state = S_new, cand
            r[k] = new_r_k
            return True
        return False

    for it in range(config.iterations):
        if config.selection == "none":
            for k in range(q):
                step = gen.normal(0.0, config.r_jump)
                r_new = r[k] * np.exp(step)
                if r_new < slab:
                    try_move("r_refine", r_new, k, np.log(r_new / r[k]))
        else:
            for g, mem in enumerate(members):
                k_act = active[g]
                if k_act < 0:
                    # Birth: pick a member, draw a slab value.
                    k = int(mem[gen.integers(mem.size)]) if mem.size > 1 else int(mem[0])
                    if mem.size > 1:
                        p_death = 1.0 / 3.0
                    else:
                        p_death = 0.5
                    r_new = gen.exponential(mu_prop)
                    if r_new < slab:
                        ratio = (
                            log_odds_in
                            + log_f1
                            - log_exp_pdf(r_new)
                            + np.log(p_death)
                        )
                        if try_move("r_birth", r_new, k, ratio):
                            active[g] = k
                else:
                    p_death = 1.0 / 3.0 if mem.size > 1 else 0.5
                    u = gen.uniform()
                    if u < p_death:
                        ratio = (
                            -log_odds_in
                            - log_f1
                            + log_exp_pdf(r[k_act])
                            - np.log(p_death)
                        )
                        if try_move("r_death", 0.0, k_act, ratio):
                            active[g] = -1
                    elif mem.size > 1 and u < 2.0 * p_death:
                        # Swap the active slot to another group member.
                        others = mem[mem != k_act]
                        k_new = int(others[gen.integers(others.size)])
                        r_new = gen.exponential(mu_prop)
                        if r_new < slab:
                            ratio = log_exp_pdf(r[k_act]) - log_exp_pdf(r_new)
                            old = r[k_act]
                            # Two-component change; do it as one proposal.
                            acc["r_swap"][1] += 1
                            S_new = S + (r_new * _component_sqdist(Z, k_new)
                                         - old * _component_sqdist(Z, k_act))
                            np.maximum(S_new, 0.0, out=S_new)
                            cand = _Marginal(lam, np.exp(-S_new), Xd, y, a_sig, b_sig)
                            if np.log(gen.uniform()) < cand.logml - state.logml + ratio:
                                acc["r_swap"][0] += 1
                                S, state = S_new, cand
                                r[k_act], r[k_new] = 0.0, r_new
                                active[g] = k_new
                    else:
                        step = gen.normal(0.0, config.r_jump)
                        r_new = r[k_act] * np.exp(step)
                        if r_new < slab:
                            try_move(
                                "r_refine", r_new, k_act, np.log(r_new / r[k_act])
                            )

        # lambda: log-scale random walk under its Gamma prior.
        acc["lambda"][1] += 1
        lam_new = lam * np.exp(gen.normal(0.0, config.lambda_jump))
        cand = _Marginal(lam_new, np.exp(-S), Xd, y, a_sig, b_sig)
        log_prior = (config.lambda_shape - 1.0) * (np.log(lam_new) - np.log(lam)) - (
            config.lambda_rate * (lam_new - lam)
        )
        if np.log(gen.uniform()) < cand.logml - state.logml + log_prior + np.log(
            lam_new / lam
        ):
            acc["lambda"][0] += 1
            lam, state = lam_new, cand

        # Exact conditional draws of sigma^2 and beta.
        phi = gen.gamma(a_sig + 0.5 * (n - Xd.shape[1]), 1.0 / (b_sig + 0.5 * state.rss))
        sigsq = 1.0 / phi
        bhat = solve_triangular(
            state.LM.T,
            solve_triangular(state.LM, state.W.T @ state.u, lower=True),
            lower=False,
        )
        beta = bhat + np.sqrt(sigsq) * solve_triangular(
            state.LM.T, gen.standard_normal(Xd.shape[1]), lower=False
        )

        if (it + 1) % config.thin == 0:
            t = (it + 1) // config.thin - 1
            rec_r[t] = r
            rec_delta[t] = (r > 0).astype(np.int8)
            if rec_omega is not None:
                rec_omega[t] = [1 if a >= 0 else 0 for a in active]
            rec_beta[t] = beta
            rec_sigsq[t] = sigsq
            rec_lam[t] = lam
            if rec_h is not None:
                rec_h[t] = _draw_h_train(
                    state, np.exp(-S), lam, sigsq, Xd, y, beta, gen
                )

    births = acc["r_birth"]
    refines = acc["r_refine"]
    tried = births[1] + refines[1] + acc["r_death"][1] + acc["r_swap"][1]
    accepted = births[0] + refines[0] + acc["r_death"][0] + acc["r_swap"][0]
    if tried:
        rate = accepted / tried
        if not 0.01 < rate < 0.99:
            warnings.warn(
                f"kernel-weight move acceptance rate {rate:.3f} outside (0.01, 0.99); "
                "consider adjusting r_jump or r_proposal_mean",
                RuntimeWarning,
                stacklevel=2,
            )

    chain = McmcChain(
        r=rec_r,
        delta=rec_delta,
        omega=rec_omega,
        beta=rec_beta,
        sigsq=rec_sigsq,
        lam=rec_lam,
        h=rec_h,
        acceptance={m: {"accepted": a, "attempted": t} for m, (a, t) in acc.items()},
    )
    key = as_seeded(rng)
    return BkmrFit(
        chain=chain,
        y=y,
        Z=Z,
        X=X,
        config=config,
        seed=(key.seed,) + key.stream,
        role=role,
        z_names=tuple(z_names),
    )


def _draw_h_train(state, K, lam, sigsq, Xd, y, beta, gen):
    """Draw h at the training points from its Gaussian conditional."""
    resid = y - Xd @ beta
    A = solve_triangular(state.L, K, lower=True)  # L^{-1} K
    mean = lam * (A.T @ solve_triangular(state.L, resid, lower=True))
    cov = sigsq * lam * (K - lam * (A.T @ A))
    Lc = _chol_psd(0.5 * (cov + cov.T), "h conditional covariance")
    return mean + Lc @ gen.standard_normal(K.shape[0])


def posterior_h_conditional(fit: BkmrFit, t: int, Znew: np.ndarray, full_cov=False):
    """Mean and (co)variance of h at new points for stored draw ``t``.

    Conditions on that draw's (lambda, r, beta, sigma^2) and the training
    data. Returns ``(mean, cov)`` with a full matrix when ``full_cov`` else
    the diagonal.
    """
    c = fit.chain
    lam, sigsq = float(c.lam[t]), float(c.sigsq[t])
    r = c.r[t]
    Znew = np.atleast_2d(np.asarray(Znew, dtype=float))
    K = _cross_kernel(fit.Z, fit.Z, r)
    V = lam * K
    V[np.diag_indices_from(V)] += 1.0
    L = _chol_psd(V, "mixed-model covariance")
    resid = fit.y - fit.design() @ c.beta[t]
    Knt = _cross_kernel(Znew, fit.Z, r)
    A = solve_triangular(L, Knt.T, lower=True)  # (n, m)
    mean = lam * (A.T @ solve_triangular(L, resid, lower=True))
    if full_cov:
        Knn = _cross_kernel(Znew, Znew, r)
        cov = sigsq * lam * (Knn - lam * (A.T @ A))
        return mean, 0.5 * (cov + cov.T)
    var = sigsq * lam * (1.0 - lam * np.sum(A * A, axis=0))
    return mean, np.maximum(var, 0.0)


@dataclass(frozen=True)
class PipSummary:
    """Posterior inclusion probabilities.

    Component-wise: ``pips[k]`` is the retained-iteration mean of delta_k.
    Hierarchical: ``group_pips[m]`` is the mean of omega_m, ``cond_pips[k]``
    the mean of delta_k among iterations with the group active, and
    ``pips[k]`` their product.
    """

    pips: np.ndarray
    names: tuple[str, ...]
    group_pips: np.ndarray | None = None
    cond_pips: np.ndarray | None = None
    groups: np.ndarray | None = None


def extract_pips(fit: BkmrFit, sel=None) -> PipSummary:
    """PIPs over retained iterations (default: second half of the chain)."""
    if fit.config.selection == "none":
        raise ValueError("fit was sampled without variable selection")
    sel = fit.default_sel() if sel is None else np.asarray(sel, dtype=int)
    if sel.size == 0:
        raise ValueError("no retained iterations")
    delta = fit.chain.delta[sel]
    if fit.config.selection == "componentwise":
        return PipSummary(pips=delta.mean(axis=0), names=fit.z_names)
    groups = np.asarray(fit.config.groups, dtype=int)
    labels = sorted(set(groups.tolist()))
    omega = fit.chain.omega[sel]
    group_pips = omega.mean(axis=0)
    cond = np.zeros(fit.q)
    pips = np.zeros(fit.q)
    for gi, lab in enumerate(labels):
        on = omega[:, gi] == 1
        for k in np.flatnonzero(groups == lab):
            cond[k] = delta[on, k].mean() if on.any() else 0.0
            pips[k] = group_pips[gi] * cond[k]
    return PipSummary(
        pips=pips,
        names=fit.z_names,
        group_pips=group_pips,
        cond_pips=cond,
        groups=groups,
    )


def predictor_response_univar(fit: BkmrFit, index: int, grid, sel=None):
    """Posterior mean and sd of h along one input, others at their medians.

    The grid must stay within the training range of that input, extended by
    10% of its span on each side. Returns ``(mean, sd)`` arrays over the
    grid, combining within-draw conditional variance and across-draw spread.
    """
    if not 0 <= index < fit.q:
        raise ValueError(f"input index {index} out of range [0, {fit.q})")
    grid = np.asarray(grid, dtype=float).ravel()
    col = fit.Z[:, index]
    span = float(col.max() - col.min())
    lo, hi = col.min() - 0.1 * span, col.max() + 0.1 * span
    if grid.min() < lo or grid.max() > hi:
        raise ValueError(
            f"grid [{grid.min():.4g}, {grid.max():.4g}] exceeds training range "
            f"[{lo:.4g}, {hi:.4g}] (+-10%)"
        )
    sel = fit.default_sel() if sel is None else np.asarray(sel, dtype=int)
    if sel.size == 0:
        raise ValueError("no retained iterations")
    Znew = np.tile(np.median(fit.Z, axis=0), (grid.size, 1))
    Znew[:, index] = grid
    means = np.empty((sel.size, grid.size))
    variances = np.empty((sel.size, grid.size))
    for i, t in enumerate(sel):
        m, v = posterior_h_conditional(fit, int(t), Znew)
        means[i], variances[i] = m, v
    mean = means.mean(axis=0)
    sd = np.sqrt(variances.mean(axis=0) + means.var(axis=0))
    return mean, sd
