"""Post-hoc identification, posterior summaries, and convergence checks.

The likelihood only sees latent positions through pairwise distances, so
each stored configuration is identified by a Procrustes transformation
(translation + rotation/reflection, no scaling) onto a reference before
summarizing. The reference is the highest log-likelihood configuration
from the burn-in period.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .sampler import ChainTrace


def _center(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = A.mean(axis=0)
    return A - mean, mean


def procrustes_align(trace: ChainTrace, reference: np.ndarray | None = None) -> ChainTrace:
    """Align every stored Z draw to the reference configuration.

    The optimal translation matches centroids; the optimal orthogonal map
    comes from the SVD of the cross-covariance between the centered draw
    and the centered reference. Scaling is excluded: the likelihood is not
    scale invariant, so scale carries information.
    """
    if reference is None:
        reference = trace.reference_Z
    if reference.shape != trace.Z.shape[1:]:
        raise ValueError(
            f"reference shape {reference.shape} does not match draws "
            f"{trace.Z.shape[1:]}"
        )
    ref_c, ref_mean = _center(reference)
    aligned = np.empty_like(trace.Z)
    for t in range(trace.Z.shape[0]):
        a_c, _ = _center(trace.Z[t])
        u, _, vt = np.linalg.svd(a_c.T @ ref_c)
        aligned[t] = a_c @ (u @ vt) + ref_mean
    return replace(trace, Z=aligned)


def procrustes_correlation(A: np.ndarray, B: np.ndarray) -> float:
    """Procrustes correlation between two configurations, in [0, 1].

    The narrower configuration is padded with zero columns. The statistic
    is the classical correlation form sqrt(1 - m^2): invariant to
    rotation, reflection, translation, and isotropic scaling of either
    configuration.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape[0] != B.shape[0]:
        raise ValueError("configurations must have the same number of rows")
    if A.shape[1] < B.shape[1]:
        A = np.hstack([A, np.zeros((A.shape[0], B.shape[1] - A.shape[1]))])
    elif B.shape[1] < A.shape[1]:
        B = np.hstack([B, np.zeros((B.shape[0], A.shape[1] - B.shape[1]))])
    a_c, _ = _center(A)
    b_c, _ = _center(B)
    norm_a = np.linalg.norm(a_c)
    norm_b = np.linalg.norm(b_c)
    if norm_a == 0 or norm_b == 0:
        raise ValueError("zero-variance configuration has no Procrustes correlation")
    s = np.linalg.svd(a_c.T @ b_c, compute_uv=False)
    return float(min(s.sum() / (norm_a * norm_b), 1.0))


@dataclass(frozen=True)
class ParamSummary:
    mean: float
    median: float
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "median": self.median,
            "lower": self.lower,
            "upper": self.upper,
        }


def _summarize(draws: np.ndarray) -> ParamSummary:
    lo, med, hi = np.quantile(draws, [0.025, 0.5, 0.975])
    return ParamSummary(
        mean=float(draws.mean()), median=float(med), lower=float(lo), upper=float(hi)
    )


@dataclass(frozen=True)
class PosteriorSummary:
    """Pooled posterior summaries of alpha, shrinkage, variances, and Z."""

    alpha: ParamSummary
    delta: tuple
    variance: tuple  # per-dimension 1/omega summaries
    z_mean: np.ndarray
    n_draws: int

    def to_dict(self) -> dict:
        return {
            "n_draws": self.n_draws,
            "alpha": self.alpha.to_dict(),
            "delta": [s.to_dict() for s in self.delta],
            "variance": [s.to_dict() for s in self.variance],
            "z_mean": self.z_mean.tolist(),
        }


def posterior_summary(traces) -> PosteriorSummary:
    """Posterior means, medians, and central 95% intervals, pooled over chains.

    The posterior-mean Z is only meaningful if traces were aligned first.
    """
    if isinstance(traces, ChainTrace):
        traces = [traces]
    if not traces or any(len(t) == 0 for t in traces):
        raise ValueError("posterior summary needs at least one non-empty trace")
    alpha = np.concatenate([t.alpha for t in traces])
    delta = np.vstack([t.delta for t in traces])
    omega = np.vstack([t.omega for t in traces])
    z = np.concatenate([t.Z for t in traces], axis=0)
    return PosteriorSummary(
        alpha=_summarize(alpha),
        delta=tuple(_summarize(delta[:, h]) for h in range(delta.shape[1])),
        variance=tuple(_summarize(1.0 / omega[:, h]) for h in range(omega.shape[1])),
        z_mean=z.mean(axis=0),
        n_draws=alpha.size,
    )


@dataclass(frozen=True)
class EffectiveDimensionReport:
    dimension: int | None  # None: no jump found up to the truncation level
    truncation_level: int
    jump_factor: float
    width_factor: float

    @property
    def message(self) -> str:
        if self.dimension is None:
            return (
                f">= {self.truncation_level} (no shrinkage jump below the "
                "truncation level; consider raising it)"
            )
        return str(self.dimension)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "truncation_level": self.truncation_level,
            "jump_factor": self.jump_factor,
            "width_factor": self.width_factor,
            "message": self.message,
        }


def effective_dimensions(
    delta_summaries,
    jump_factor: float = 2.0,
    width_factor: float = 2.0,
) -> EffectiveDimensionReport:
    """Infer the effective latent dimension from posterior delta summaries.

    Flags the smallest h >= 2 whose posterior mean shrinkage jumps by more
    than ``jump_factor`` over dimension h-1 while its 95% interval widens
    by more than ``width_factor``; the effective dimension is then h-1.
    Without such a jump the report states the dimension is at least the
    truncation level.

    The jump comparison floors the previous mean at 1: the first strength
    is an unconstrained scale (often far below 1) while later strengths
    are shrinkage rates bounded below by 1, so a rate is only a jump when
    it is large relative to the no-shrinkage level, not merely relative to
    a small first-dimension scale.
    """
    delta_summaries = list(delta_summaries)
    p = len(delta_summaries)
    if p < 2:
        raise ValueError("effective-dimension inference needs p >= 2")
    for h in range(2, p + 1):
        prev, cur = delta_summaries[h - 2], delta_summaries[h - 1]
        jumped = cur.mean > jump_factor * max(prev.mean, 1.0)
        widened = cur.width > width_factor * prev.width
        if jumped and widened:
            return EffectiveDimensionReport(h - 1, p, jump_factor, width_factor)
    return EffectiveDimensionReport(None, p, jump_factor, width_factor)


def split_psrf(chains: np.ndarray) -> float:
    """Potential scale reduction from an (m, T) array of chain draws."""
    chains = np.asarray(chains, dtype=np.float64)
    if chains.ndim != 2 or chains.shape[0] < 2:
        raise ValueError("need at least two chains")
    m, t = chains.shape
    if t < 10:
        raise ValueError("chains must have length >= 10")
    means = chains.mean(axis=1)
    w = chains.var(axis=1, ddof=1).mean()
    b = t * np.var(means, ddof=1)
    var_plus = (t - 1) / t * w + b / t
    return float(np.sqrt(var_plus / w))


def trace_parameter(trace: ChainTrace, name: str) -> np.ndarray:
    """Extract a named scalar parameter series from a trace.

    Names: ``alpha``, ``log_lik``, ``delta_h`` or ``omega_h`` with a
    1-based dimension index.
    """
    if name == "alpha":
        return trace.alpha
    if name == "log_lik":
        return trace.log_lik
    for prefix, table in (("delta_", trace.delta), ("omega_", trace.omega)):
        if name.startswith(prefix):
            h = int(name[len(prefix):])
            if not 1 <= h <= table.shape[1]:
                raise ValueError(f"dimension index out of range in {name!r}")
            return table[:, h - 1]
    raise ValueError(f"unknown parameter {name!r}")


def gelman_rubin(traces, parameter: str = "alpha") -> float:
    """Gelman-Rubin R-hat for one parameter across chains of equal length."""
    if len(traces) < 2:
        raise ValueError("Gelman-Rubin needs at least two chains")
    series = [trace_parameter(t, parameter) for t in traces]
    lengths = {s.size for s in series}
    if len(lengths) != 1:
        raise ValueError("chains must have equal lengths")
    return split_psrf(np.vstack(series))


def autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags 0..max_lag (lag 0 equals 1)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if x.size <= max_lag:
        raise ValueError("series must be longer than max_lag")
    centered = x - x.mean()
    c0 = float(centered @ centered) / x.size
    if c0 == 0:
        raise ValueError("constant series has undefined autocorrelation")
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for k in range(1, max_lag + 1):
        acf[k] = float(centered[:-k] @ centered[k:]) / x.size / c0
    return acf
