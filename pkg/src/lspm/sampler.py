"""Metropolis-within-Gibbs sampler for latent shrinkage position models.

Each iteration updates, in order: the latent positions Z by a random-walk
Metropolis move scaled by the current precisions, the connectivity
parameter alpha by an independence-style Metropolis-Hastings move whose
Gaussian proposal comes from a quadratic expansion of the log conditional
(recomputed at the candidate for the reverse density), and the shrinkage
strengths delta by exact Gibbs draws, after which the precisions omega
are recomputed as cumulative products.

Latent positions can be updated either as a whole configuration (the
textbook move; acceptance degrades sharply beyond roughly one hundred
nodes) or one node at a time, which keeps acceptance usable on larger
networks. The per-node sweep is JIT-compiled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy.special import expit

from .initialize import ChainState, initialize_chain
from .model import (
    _alpha_curvature_kernel,
    _alpha_full_kernel,
    _delta1_params_from_sums,
    _deltah_params_from_sums,
    _log1pexp,
    latent_column_sums,
    link_for_kind,
    ll_from_parts,
    pairwise_sq_distances,
    poisson_log_yfact,
)
from .network import COUNT, Network
from .prior import Hyperparams, ShrinkageState, sample_truncated_gamma

WHOLE_MATRIX = "whole"
PER_NODE = "pernode"


class SamplerError(RuntimeError):
    """Raised when the chain reaches an invalid state; carries diagnostics."""

    def __init__(self, message: str, iteration: int, state: ChainState):
        super().__init__(
            f"{message} at iteration {iteration}; last state: "
            f"alpha={state.alpha!r}, log_lik={state.log_lik!r}, "
            f"delta={np.array2string(state.shrink.delta, precision=6)}, "
            f"|Z|_max={np.abs(state.Z).max()!r}"
        )
        self.iteration = iteration
        self.state = state


@dataclass(frozen=True)
class SamplerConfig:
    """Run length, proposal step sizes, and update granularity of one chain."""

    iterations: int = 500_000
    burn_in: int = 50_000
    thin: int = 2_000
    step_z: float = 0.01
    step_alpha: float = 1.0
    z_update: str = WHOLE_MATRIX
    seed: int = 0
    alpha_inflation: float = 1.5
    init_jitter_sd: float = 0.0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        for name, value in (("step_z", self.step_z), ("step_alpha", self.step_alpha)):
            if not 0.01 <= value <= 10.0:
                raise ValueError(f"{name} must lie in [0.01, 10], got {value}")
        if self.z_update not in (WHOLE_MATRIX, PER_NODE):
            raise ValueError(f"z_update must be '{WHOLE_MATRIX}' or '{PER_NODE}'")


@dataclass
class ChainTrace:
    """Thinned post-burn-in draws of one chain plus acceptance bookkeeping."""

    iters: np.ndarray
    alpha: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    log_lik: np.ndarray
    Z: np.ndarray
    accept_rate_z: float
    accept_rate_alpha: float
    reference_Z: np.ndarray
    reference_log_lik: float
    seed: int

    def __len__(self) -> int:
        return self.alpha.size

    @property
    def p(self) -> int:
        return self.delta.shape[1]


@dataclass
class _NetCache:
    """Per-dataset constants reused across iterations."""

    link: str
    poisson: bool
    log_yfact: float  # 0 for binary networks
    y_total: float
    y_float: np.ndarray
    ysum: np.ndarray  # y + y^T as float, for per-node likelihood deltas


def _net_cache(net: Network) -> _NetCache:
    link = link_for_kind(net.kind)
    poisson = net.kind == COUNT
    y = np.ascontiguousarray(net.edges.astype(np.float64))
    return _NetCache(
        link=link,
        poisson=poisson,
        log_yfact=poisson_log_yfact(net) if poisson else 0.0,
        y_total=float(y.sum()),
        y_float=y,
        ysum=np.ascontiguousarray(y + y.T),
    )


def propose_z(
    state: ChainState,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    node: int | None = None,
) -> np.ndarray:
    """Random-walk candidate: entries perturbed by sqrt(step_z / omega_l).

    With ``node`` given, only that row of Z is perturbed.
    """
    scale = np.sqrt(cfg.step_z / state.shrink.omega)
    candidate = state.Z.copy()
    if node is None:
        candidate += rng.standard_normal(state.Z.shape) * scale
    else:
        candidate[node] += rng.standard_normal(state.Z.shape[1]) * scale
    return candidate


def _z_log_accept(net, candidate, state, cache):
    d2_cand = pairwise_sq_distances(candidate)
    ll_cand = ll_from_parts(
        d2_cand, cache.y_float, state.alpha, cache.poisson, cache.log_yfact
    )
    d_prior = -0.5 * float(
        (state.shrink.omega * (candidate * candidate - state.Z * state.Z)).sum()
    )
    return ll_cand - state.log_lik + d_prior, ll_cand, d2_cand


def accept_z(
    state: ChainState,
    candidate: np.ndarray,
    net: Network,
    rng: np.random.Generator,
) -> tuple[ChainState, bool]:
    """Metropolis accept/reject for a symmetric random-walk Z candidate.

    The acceptance ratio is likelihood ratio times the prior ratio
    p(candidate | Omega) / p(current | Omega); the random-walk proposal
    densities cancel by symmetry.
    """
    cache = _net_cache(net)
    log_ratio, ll_cand, _ = _z_log_accept(net, candidate, state, cache)
    if math.log(rng.random()) < log_ratio:
        new = replace(state, Z=candidate, log_lik=ll_cand)
        return new, True
    return state, False


def _informed_params(d2, alpha, hp, cfg, cache):
    """Gaussian proposal (mean, variance) for alpha, expanded around alpha."""
    expected, curvature = _alpha_curvature_kernel(d2, float(alpha), cache.poisson)
    variance = cfg.step_alpha / (curvature + 1.0 / hp.sigma2_alpha)
    score = cache.y_total - expected + (hp.mu_alpha - alpha) / hp.sigma2_alpha
    return alpha + variance * score, variance


def informed_alpha_proposal(
    state: ChainState,
    net: Network,
    hp: Hyperparams,
    cfg: SamplerConfig,
    d2: np.ndarray | None = None,
) -> tuple[float, float]:
    """Proposal distribution for alpha based on a quadratic expansion.

    The curvature of the log conditional at the current alpha (sum of
    Poisson rates, or of Bernoulli variances under the logit link) sets
    the proposal variance, scaled by ``step_alpha``; the score sets the
    drift of the mean.
    """
    cache = _net_cache(net)
    if d2 is None:
        d2 = pairwise_sq_distances(state.Z)
    return _informed_params(d2, state.alpha, hp, cfg, cache)


def _normal_logpdf(x, mean, var):
    return -0.5 * (math.log(2.0 * math.pi * var) + (x - mean) ** 2 / var)


def accept_alpha(
    state: ChainState,
    candidate_alpha: float,
    forward: tuple[float, float],
    reverse: tuple[float, float],
    net: Network,
    hp: Hyperparams,
    rng: np.random.Generator,
    d2: np.ndarray | None = None,
) -> tuple[ChainState, bool]:
    """Metropolis-Hastings step for alpha with asymmetric proposal correction.

    ``forward`` are the proposal parameters at the current point,
    ``reverse`` those recomputed at the candidate.
    """
    cache = _net_cache(net)
    if d2 is None:
        d2 = pairwise_sq_distances(state.Z)
    ll_cand = ll_from_parts(
        d2, cache.y_float, candidate_alpha, cache.poisson, cache.log_yfact
    )

    def log_prior(a):
        return -0.5 * (a - hp.mu_alpha) ** 2 / hp.sigma2_alpha

    log_ratio = (
        ll_cand
        + log_prior(candidate_alpha)
        - state.log_lik
        - log_prior(state.alpha)
        + _normal_logpdf(state.alpha, *reverse)
        - _normal_logpdf(candidate_alpha, *forward)
    )
    if math.log(rng.random()) < log_ratio:
        new = replace(state, alpha=float(candidate_alpha), log_lik=ll_cand)
        return new, True
    return state, False


def gibbs_update_deltas(
    state: ChainState, hp: Hyperparams, rng: np.random.Generator
) -> ShrinkageState:
    """Exact Gibbs draws of the shrinkage strengths, in dimension order.

    delta_1 comes from its gamma full conditional; each later delta_h from
    its left-truncated gamma full conditional, conditioning on the already
    updated strengths below h and the not-yet-updated strengths above h.
    """
    n = state.Z.shape[0]
    col_sums = latent_column_sums(state.Z)
    delta = state.shrink.delta.copy()
    shape, rate = _delta1_params_from_sums(col_sums, delta, hp, n)
    delta[0] = rng.gamma(shape, 1.0 / rate)
    for h in range(2, delta.size + 1):
        shape, rate, lower = _deltah_params_from_sums(h, col_sums, delta, hp, n)
        delta[h - 1] = sample_truncated_gamma(shape, rate, lower, rng)
    return ShrinkageState.from_delta(delta)


@njit(cache=True)
def _log1pexp(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(cache=True)
def _pernode_sweep(Z, d2, ysum, alpha, omega, eps, log_u, poisson):
    """One Metropolis sweep over nodes; mutates Z and d2 in place.

    d2 is kept exact by recomputing the changed row from coordinates on
    every acceptance. eps holds pre-scaled proposal noise. Returns the
    accept count and the accumulated log-likelihood change.
    """
    n, p = Z.shape
    accepted = 0
    ll_change = 0.0
    z_new = np.empty(p)
    d2_new = np.empty(n)
    for i in range(n):
        for l in range(p):
            z_new[l] = Z[i, l] + eps[i, l]
        delta_ll = 0.0
        for j in range(n):
            if j == i:
                d2_new[j] = 0.0
                continue
            s = 0.0
            for l in range(p):
                diff = z_new[l] - Z[j, l]
                s += diff * diff
            d2_new[j] = s
            eta_old = alpha - d2[i, j]
            eta_new = alpha - s
            if eta_old > 700.0:
                eta_old = 700.0
            if eta_new > 700.0:
                eta_new = 700.0
            if poisson:
                delta_ll += (eta_new - eta_old) * ysum[i, j] - 2.0 * (
                    math.exp(eta_new) - math.exp(eta_old)
                )
            else:
                delta_ll += (eta_new - eta_old) * ysum[i, j] - 2.0 * (
                    _log1pexp(eta_new) - _log1pexp(eta_old)
                )
        d_prior = 0.0
        for l in range(p):
            d_prior -= 0.5 * omega[l] * (z_new[l] * z_new[l] - Z[i, l] * Z[i, l])
        if log_u[i] < delta_ll + d_prior:
            accepted += 1
            ll_change += delta_ll
            for l in range(p):
                Z[i, l] = z_new[l]
            for j in range(n):
                d2[i, j] = d2_new[j]
                d2[j, i] = d2_new[j]
    return accepted, ll_change


def mcmc_step(
    state: ChainState,
    net: Network,
    hp: Hyperparams,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    cache: _NetCache | None = None,
    d2: np.ndarray | None = None,
):
    """Run one full iteration (Z move, alpha move, delta Gibbs) in place.

    Returns (d2, z_accepts, z_proposals, alpha_accepted) where d2 is the
    pairwise squared-distance matrix of the updated configuration.
    """
    if cache is None:
        cache = _net_cache(net)
    if d2 is None:
        d2 = pairwise_sq_distances(state.Z)

    if cfg.z_update == WHOLE_MATRIX:
        candidate = propose_z(state, cfg, rng)
        log_ratio, ll_cand, d2_cand = _z_log_accept(net, candidate, state, cache)
        z_proposals = 1
        z_accepts = 0
        if math.log(rng.random()) < log_ratio:
            state.Z = candidate
            state.log_lik = ll_cand
            d2 = d2_cand
            z_accepts = 1
    else:
        n = net.n
        scale = np.sqrt(cfg.step_z / state.shrink.omega)
        eps = rng.standard_normal(state.Z.shape) * scale
        log_u = np.log(rng.random(n))
        if not state.Z.flags.c_contiguous:
            state.Z = np.ascontiguousarray(state.Z)
        z_accepts, ll_change = _pernode_sweep(
            state.Z,
            d2,
            cache.ysum,
            state.alpha,
            state.shrink.omega,
            eps,
            log_u,
            cache.poisson,
        )
        z_accepts = int(z_accepts)
        z_proposals = n
        state.log_lik += ll_change

    # informed alpha move; the reverse proposal parameters and the
    # candidate's likelihood come from a single fused pass over dyads
    expected, curv = _alpha_curvature_kernel(d2, float(state.alpha), cache.poisson)
    fwd_var = cfg.step_alpha / (curv + 1.0 / hp.sigma2_alpha)
    fwd_score = (
        cache.y_total - expected + (hp.mu_alpha - state.alpha) / hp.sigma2_alpha
    )
    forward = (state.alpha + fwd_var * fwd_score, fwd_var)
    candidate_alpha = float(rng.normal(forward[0], math.sqrt(forward[1])))
    ll_raw, expected_c, curv_c = _alpha_full_kernel(
        d2, cache.y_float, candidate_alpha, cache.poisson
    )
    ll_cand_alpha = float(ll_raw) - cache.log_yfact
    rev_var = cfg.step_alpha / (curv_c + 1.0 / hp.sigma2_alpha)
    rev_score = (
        cache.y_total
        - expected_c
        + (hp.mu_alpha - candidate_alpha) / hp.sigma2_alpha
    )
    reverse = (candidate_alpha + rev_var * rev_score, rev_var)
    log_ratio = (
        ll_cand_alpha
        - 0.5 * (candidate_alpha - hp.mu_alpha) ** 2 / hp.sigma2_alpha
        - state.log_lik
        + 0.5 * (state.alpha - hp.mu_alpha) ** 2 / hp.sigma2_alpha
        + _normal_logpdf(state.alpha, *reverse)
        - _normal_logpdf(candidate_alpha, *forward)
    )
    alpha_accepted = False
    if math.log(rng.random()) < log_ratio:
        state.alpha = candidate_alpha
        state.log_lik = ll_cand_alpha
        alpha_accepted = True

    state.shrink = gibbs_update_deltas(state, hp, rng)
    return d2, z_accepts, z_proposals, int(alpha_accepted)


def run_chain(
    net: Network,
    hp: Hyperparams,
    cfg: SamplerConfig,
    kind: str | None = None,
) -> ChainTrace:
    """Run one chain: initialize, iterate, and record thinned draws.

    Deterministic for a fixed seed. The trace also stores the highest
    log-likelihood configuration seen during burn-in, which serves as the
    Procrustes reference downstream.
    """
    kind = kind or net.kind
    if kind != net.kind:
        raise ValueError(f"requested kind {kind!r} does not match network kind")
    if hp.p >= net.n / 2:
        raise ValueError(
            f"truncation level p={hp.p} must be below n/2={net.n / 2:g}"
        )
    rng = np.random.default_rng(cfg.seed)
    state = initialize_chain(
        net,
        hp,
        kind,
        alpha_inflation=cfg.alpha_inflation,
        jitter_sd=cfg.init_jitter_sd,
        rng=rng,
    )
    cache = _net_cache(net)
    d2 = pairwise_sq_distances(state.Z)

    n, p = state.Z.shape
    n_keep = (cfg.iterations - cfg.burn_in) // cfg.thin
    out_iters = np.zeros(n_keep, dtype=np.int64)
    out_alpha = np.zeros(n_keep)
    out_delta = np.zeros((n_keep, p))
    out_omega = np.zeros((n_keep, p))
    out_ll = np.zeros(n_keep)
    out_Z = np.zeros((n_keep, n, p))

    best_ll = state.log_lik
    best_Z = state.Z.copy()
    z_acc = z_prop = a_acc = 0
    kept = 0

    for s in range(1, cfg.iterations + 1):
        d2, za, zp, aa = mcmc_step(state, net, hp, cfg, rng, cache, d2)
        state.iteration = s
        z_acc += za
        z_prop += zp
        a_acc += aa

        if not (np.isfinite(state.log_lik) and np.isfinite(state.alpha)):
            raise SamplerError("non-finite sampler state", s, state)
        if s % 1000 == 0:
            # validate the cached quantities against a fresh pass, then
            # resynchronize to stop incremental rounding from accumulating
            d2 = pairwise_sq_distances(state.Z)
            fresh = ll_from_parts(
                d2, cache.y_float, state.alpha, cache.poisson, cache.log_yfact
            )
            if not np.isclose(fresh, state.log_lik, rtol=1e-8, atol=1e-6):
                raise SamplerError(
                    f"cached log-likelihood drifted (cached {state.log_lik}, "
                    f"recomputed {fresh})",
                    s,
                    state,
                )
            state.log_lik = fresh

        if s <= cfg.burn_in:
            if state.log_lik > best_ll:
                best_ll = state.log_lik
                best_Z = state.Z.copy()
        elif (s - cfg.burn_in) % cfg.thin == 0 and kept < n_keep:
            out_iters[kept] = s
            out_alpha[kept] = state.alpha
            out_delta[kept] = state.shrink.delta
            out_omega[kept] = state.shrink.omega
            out_ll[kept] = state.log_lik
            out_Z[kept] = state.Z
            kept += 1

    return ChainTrace(
        iters=out_iters,
        alpha=out_alpha,
        delta=out_delta,
        omega=out_omega,
        log_lik=out_ll,
        Z=out_Z,
        accept_rate_z=z_acc / max(z_prop, 1),
        accept_rate_alpha=a_acc / cfg.iterations,
        reference_Z=best_Z,
        reference_log_lik=best_ll,
        seed=cfg.seed,
    )


def _run_single(args):
    net, hp, cfg, kind = args
    return run_chain(net, hp, cfg, kind)


def run_chains(
    net: Network,
    hp: Hyperparams,
    cfg: SamplerConfig,
    kind: str | None = None,
    n_chains: int = 1,
    n_jobs: int = 1,
) -> list[ChainTrace]:
    """Run independent chains with seeds seed + chain index.

    Each chain owns its generator and initialization jitter, so results do
    not depend on execution order or the worker count.
    """
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")
    jobs = [
        (net, hp, replace(cfg, seed=cfg.seed + idx), kind) for idx in range(n_chains)
    ]
    if n_jobs > 1 and n_chains > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(n_jobs, n_chains)) as pool:
            return list(pool.map(_run_single, jobs))
    return [_run_single(job) for job in jobs]
