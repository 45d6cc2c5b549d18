"""Linear predictor, likelihoods, and full-conditional building blocks.

The latent position model puts the linear predictor
``eta_ij = alpha - ||z_i - z_j||^2`` through a logit link (binary edges)
or a log link (count edges). Log-likelihoods sum over all ordered pairs
i != j in row-major order so repeated evaluations are bit-reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import expit, gammaln

from .network import BINARY, COUNT, Network
from .prior import Hyperparams, ShrinkageState

LOGIT = "logit"
LOG = "log"
LINKS = (LOGIT, LOG)

# Linear predictors beyond this magnitude are clipped before
# exponentiation; never reached for sane data (|alpha| < 40, d^2 < 600).
ETA_CLIP = 700.0


class _ClipCounter:
    """Counts how many linear-predictor entries have ever been clipped."""

    def __init__(self):
        self.count = 0

    def add(self, k: int):
        self.count += int(k)

    def reset(self):
        self.count = 0


CLIP_EVENTS = _ClipCounter()


def link_for_kind(kind: str) -> str:
    if kind == BINARY:
        return LOGIT
    if kind == COUNT:
        return LOG
    raise ValueError(f"unknown edge kind {kind!r}")


@dataclass(frozen=True)
class ModelParams:
    """Connectivity level and link kind of the edge model."""

    alpha: float
    link: str

    def __post_init__(self):
        if self.link not in LINKS:
            raise ValueError(f"unknown link {self.link!r}")
        if not np.isfinite(self.alpha):
            raise ValueError("alpha must be finite")


def sq_distance(Z: np.ndarray, i: int, j: int) -> float:
    """Squared Euclidean distance between latent positions i and j."""
    if i == j:
        raise ValueError("squared distance is only defined for distinct nodes")
    diff = Z[i] - Z[j]
    return float((diff * diff).sum())


def pairwise_sq_distances(Z: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances of the rows of Z."""
    diff = Z[:, None, :] - Z[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def clipped_eta(alpha: float, d2: np.ndarray) -> np.ndarray:
    """Linear predictor alpha - d2, clipped to +-ETA_CLIP with accounting."""
    eta = alpha - d2
    over = np.count_nonzero(np.abs(eta) > ETA_CLIP)
    if over:
        CLIP_EVENTS.add(over)
        eta = np.clip(eta, -ETA_CLIP, ETA_CLIP)
    return eta


def edge_mean(alpha: float, d2, link: str):
    """Mean of the edge distribution: a probability (logit) or rate (log)."""
    d2 = np.asarray(d2, dtype=np.float64)
    eta = clipped_eta(alpha, d2)
    if link == LOGIT:
        return expit(eta)
    if link == LOG:
        return np.exp(eta)
    raise ValueError(f"unknown link {link!r}")


def poisson_log_yfact(net: Network) -> float:
    """Sum of log(y_ij!) over ordered pairs; constant across iterations."""
    terms = gammaln(net.edges + 1.0)
    np.fill_diagonal(terms, 0.0)
    return float(terms.sum())


def _check_link_kind(net: Network, link: str):
    if link_for_kind(net.kind) != link:
        raise ValueError(
            f"link {link!r} does not match network kind {net.kind!r}"
        )


@njit(cache=True)
def _log1pexp(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(cache=True)
def _ll_kernel(d2, y, alpha, poisson):
    """Row-major ordered-pair log-likelihood sum; returns (value, clips)."""
    n = d2.shape[0]
    total = 0.0
    clipped = 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            eta = alpha - d2[i, j]
            if eta > ETA_CLIP:
                eta = ETA_CLIP
                clipped += 1
            elif eta < -ETA_CLIP:
                eta = -ETA_CLIP
                clipped += 1
            if poisson:
                total += eta * y[i, j] - math.exp(eta)
            else:
                total += eta * y[i, j] - _log1pexp(eta)
    return total, clipped


@njit(cache=True)
def _alpha_curvature_kernel(d2, alpha, poisson):
    """Sums driving the informed alpha proposal: (score term, curvature)."""
    n = d2.shape[0]
    expected = 0.0
    curvature = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            eta = alpha - d2[i, j]
            if eta > ETA_CLIP:
                eta = ETA_CLIP
            elif eta < -ETA_CLIP:
                eta = -ETA_CLIP
            if poisson:
                rate = math.exp(eta)
                expected += rate
                curvature += rate
            else:
                q = 1.0 / (1.0 + math.exp(-eta))
                expected += q
                curvature += q * (1.0 - q)
    return expected, curvature


@njit(cache=True)
def _alpha_full_kernel(d2, y, alpha, poisson):
    """One pass returning (log-lik sans y! term, expected sum, curvature sum)."""
    n = d2.shape[0]
    total = 0.0
    expected = 0.0
    curvature = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            eta = alpha - d2[i, j]
            if eta > ETA_CLIP:
                eta = ETA_CLIP
            elif eta < -ETA_CLIP:
                eta = -ETA_CLIP
            if poisson:
                rate = math.exp(eta)
                total += eta * y[i, j] - rate
                expected += rate
                curvature += rate
            else:
                e = math.exp(-abs(eta))
                log1p_term = math.log1p(e)
                if eta > 0.0:
                    total += eta * y[i, j] - (eta + log1p_term)
                    q = 1.0 / (1.0 + e)
                else:
                    total += eta * y[i, j] - log1p_term
                    q = e / (1.0 + e)
                expected += q
                curvature += q * (1.0 - q)
    return total, expected, curvature


def ll_from_parts(
    d2: np.ndarray, y_float: np.ndarray, alpha: float, poisson: bool, log_yfact: float
) -> float:
    """Hot-path likelihood evaluation on pre-extracted arrays."""
    value, clipped = _ll_kernel(d2, y_float, float(alpha), poisson)
    if clipped:
        CLIP_EVENTS.add(clipped)
    return float(value) - log_yfact


def log_likelihood_from_d2(
    net: Network,
    d2: np.ndarray,
    alpha: float,
    link: str,
    log_yfact: float | None = None,
) -> float:
    """Log-likelihood given precomputed pairwise squared distances."""
    _check_link_kind(net, link)
    if link == LOGIT:
        log_yfact = 0.0
    elif log_yfact is None:
        log_yfact = poisson_log_yfact(net)
    return ll_from_parts(
        d2, net.edges.astype(np.float64), alpha, link == LOG, log_yfact
    )


def log_likelihood(
    net: Network,
    Z: np.ndarray,
    params: ModelParams,
    log_yfact: float | None = None,
) -> float:
    """Model log-likelihood over all ordered pairs i != j.

    For count networks the constant sum of log(y!) terms may be passed in
    (it only needs computing once per dataset).
    """
    if Z.shape[0] != net.n:
        raise ValueError(f"Z has {Z.shape[0]} rows but network has {net.n} nodes")
    d2 = pairwise_sq_distances(Z)
    return log_likelihood_from_d2(net, d2, params.alpha, params.link, log_yfact)


def log_full_conditional_Z(
    net: Network,
    Z: np.ndarray,
    params: ModelParams,
    shrink: ShrinkageState,
    log_yfact: float | None = None,
) -> float:
    """Log density of Z given everything else, up to an additive constant."""
    ll = log_likelihood(net, Z, params, log_yfact)
    prior = -0.5 * float((shrink.omega * Z * Z).sum())
    return ll + prior


def latent_column_sums(Z: np.ndarray) -> np.ndarray:
    """Per-dimension sums of squared latent positions."""
    return (Z * Z).sum(axis=0)


def _delta1_params_from_sums(col_sums, delta, hp, n):
    p = col_sums.size
    # weights prod_{m=2..l} delta_m; the empty product for l=1 is 1
    w = 1.0
    quad = float(col_sums[0])
    for l in range(1, p):
        w *= delta[l]
        quad += w * float(col_sums[l])
    return n * p / 2.0 + hp.a1, hp.b1 + 0.5 * quad


def _deltah_params_from_sums(h, col_sums, delta, hp, n):
    p = col_sums.size
    w = 1.0
    for m in range(h - 1):
        w *= delta[m]
    quad = w * float(col_sums[h - 1])
    for l in range(h, p):
        w *= delta[l]
        quad += w * float(col_sums[l])
    return n * (p - h + 1) / 2.0 + hp.a2, hp.b2 + 0.5 * quad, 1.0


def delta1_conditional_params(
    Z: np.ndarray, delta: np.ndarray, hp: Hyperparams
) -> tuple[float, float]:
    """Gamma(shape, rate) parameters of the delta_1 full conditional."""
    n, _ = Z.shape
    return _delta1_params_from_sums(latent_column_sums(Z), delta, hp, n)


def deltah_conditional_params(
    h: int, Z: np.ndarray, delta: np.ndarray, hp: Hyperparams
) -> tuple[float, float, float]:
    """Truncated-gamma parameters (shape, rate, lower=1) for delta_h, h >= 2.

    The rate sums over dimensions l = h..p with weights
    prod_{m<=l, m != h} delta_m, i.e. the cumulative product with the h-th
    factor removed.
    """
    n, p = Z.shape
    if not 2 <= h <= p:
        raise ValueError(f"h must be in [2, {p}], got {h}")
    return _deltah_params_from_sums(h, latent_column_sums(Z), delta, hp, n)
