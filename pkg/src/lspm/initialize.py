"""Chain initialization: MDS on geodesic distances, regression, rescaling.

The starting configuration embeds the network's geodesic distances with
classical multidimensional scaling, calibrates the connectivity and
distance scale with a generalized linear regression on the vectorized
adjacency matrix, and derives an empirical shrinkage state from the
column variances of the rescaled configuration.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .model import ModelParams, link_for_kind, log_likelihood, pairwise_sq_distances
from .network import BINARY, COUNT, Network, geodesic_distances
from .prior import Hyperparams, ShrinkageState


@dataclass
class ChainState:
    """Full sampler state at one iteration."""

    Z: np.ndarray
    alpha: float
    shrink: ShrinkageState
    log_lik: float
    iteration: int = 0


class InitializationWarning(UserWarning):
    """Signals a degraded (fallback) initialization path."""


def classical_mds(D: np.ndarray, p: int) -> np.ndarray:
    """Classical (Torgerson) multidimensional scaling.

    Double-centers the squared distance matrix, eigendecomposes it, and
    returns coordinates sqrt(lambda_k) * v_k for the p largest
    eigenvalues. Dimensions with non-positive eigenvalues get zero-filled
    coordinates. Output columns are mean-centered by construction and are
    sign-fixed so the largest-magnitude entry of each column is positive.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if D.ndim != 2 or D.shape[1] != n:
        raise ValueError("distance matrix must be square")
    if p >= n:
        raise ValueError(f"number of dimensions p={p} must be below n={n}")
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ (D * D) @ J
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals, kind="stable")[::-1]
    coords = np.zeros((n, p))
    for k in range(p):
        lam = evals[order[k]]
        if lam > 0:
            col = evecs[:, order[k]] * np.sqrt(lam)
            pivot = np.argmax(np.abs(col))
            if col[pivot] < 0:
                col = -col
            coords[:, k] = col
    return coords


def _irls_fallback(y: np.ndarray, kind: str) -> tuple[float, float]:
    m = y.size
    mean = float(y.mean())
    if kind == BINARY:
        mean = min(max(mean, 0.5 / m), 1.0 - 0.5 / m)
        alpha = float(np.log(mean / (1.0 - mean)))
    else:
        alpha = float(np.log(max(mean, 0.5 / m)))
    warnings.warn(
        "initial regression is degenerate; falling back to intercept-only "
        f"estimates (alpha={alpha:.3f}, beta=1)",
        InitializationWarning,
        stacklevel=3,
    )
    return alpha, 1.0


def init_regression(net: Network, Z0: np.ndarray, kind: str) -> tuple[float, float]:
    """Fit link(E[y_ij]) = alpha - beta * d2_ij by IRLS on ordered pairs.

    Returns maximum-likelihood estimates (alpha_hat, beta_hat). Degenerate
    problems (constant responses, separation, singular weights) fall back
    to an intercept-only estimate with beta = 1 and a warning.
    """
    if kind not in (BINARY, COUNT):
        raise ValueError(f"unknown edge kind {kind!r}")
    n = net.n
    mask = ~np.eye(n, dtype=bool)
    y = net.edges[mask].astype(np.float64)
    d2 = pairwise_sq_distances(Z0)[mask]
    if np.ptp(y) == 0 or np.ptp(d2) < 1e-12:
        return _irls_fallback(y, kind)

    X = np.column_stack([np.ones_like(d2), -d2])
    mean = min(max(float(y.mean()), 1e-6), 1.0 - 1e-6) if kind == BINARY else None
    if kind == BINARY:
        beta = np.array([np.log(mean / (1.0 - mean)), 0.0])
    else:
        beta = np.array([np.log(max(float(y.mean()), 1e-6)), 0.0])

    for _ in range(100):
        eta = X @ beta
        if kind == BINARY:
            mu = expit(eta)
            w = mu * (1.0 - mu)
        else:
            mu = np.exp(np.clip(eta, -700, 700))
            w = mu
        if not np.all(np.isfinite(mu)) or w.max() < 1e-10:
            return _irls_fallback(y, kind)
        w = np.maximum(w, 1e-10)
        z = eta + (y - mu) / w
        xtw = X.T * w
        try:
            new_beta = np.linalg.solve(xtw @ X, xtw @ z)
        except np.linalg.LinAlgError:
            return _irls_fallback(y, kind)
        if not np.all(np.isfinite(new_beta)) or np.abs(new_beta).max() > 1e6:
            return _irls_fallback(y, kind)
        step = np.abs(new_beta - beta).max()
        beta = new_beta
        if step < 1e-8:
            break
    return float(beta[0]), float(beta[1])


def empirical_shrinkage(Z: np.ndarray) -> ShrinkageState:
    """Shrinkage state whose precisions match the column variances of Z.

    omega_l is the reciprocal column variance; delta ratios below 1 for
    h >= 2 are clamped to 1 so the state lies in the prior's support, and
    omega is recomputed from the clamped deltas.
    """
    variances = np.maximum(Z.var(axis=0), 1e-12)
    omega = 1.0 / variances
    delta = np.empty_like(omega)
    delta[0] = omega[0]
    for h in range(1, omega.size):
        delta[h] = max(omega[h] / omega[h - 1], 1.0)
    return ShrinkageState.from_delta(delta)


def initialize_chain(
    net: Network,
    hp: Hyperparams,
    kind: str | None = None,
    alpha_inflation: float = 1.5,
    jitter_sd: float = 0.0,
    rng: np.random.Generator | None = None,
) -> ChainState:
    """Build the starting chain state from the observed network.

    Applies MDS to the geodesic distances, rescales by the regression
    slope (Z <- sqrt(|beta_hat|) Z), inflates the regression intercept by
    ``alpha_inflation``, optionally jitters the configuration with
    Gaussian noise for multi-chain dispersion, and sets the shrinkage
    state empirically.
    """
    kind = kind or net.kind
    if kind != net.kind:
        raise ValueError(f"requested kind {kind!r} does not match network")
    if jitter_sd < 0:
        raise ValueError("jitter_sd must be non-negative")
    if jitter_sd > 0 and rng is None:
        raise ValueError("jitter requires a random generator")

    D = geodesic_distances(net)
    Z = classical_mds(D, hp.p)
    alpha_hat, beta_hat = init_regression(net, Z, kind)
    Z = np.sqrt(abs(beta_hat)) * Z
    alpha = alpha_hat * alpha_inflation
    if jitter_sd > 0:
        Z = Z + rng.normal(0.0, jitter_sd, size=Z.shape)
    shrink = empirical_shrinkage(Z)
    params = ModelParams(alpha=alpha, link=link_for_kind(kind))
    ll = log_likelihood(net, Z, params)
    return ChainState(Z=Z, alpha=alpha, shrink=shrink, log_lik=ll, iteration=0)
