"""Posterior predictive replicate networks and the fit-assessment metrics.

Replicates are drawn from posterior states pooled across chains. Binary
fits are checked with accuracy, F1, density, transitivity, and normalized
Hamming distance; count fits with count-frequency tables, mean absolute
differences, and a deviance pseudo R^2. All metrics depend on the latent
positions only through distances, so they are invariant to the Procrustes
identification.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .model import edge_mean, link_for_kind, pairwise_sq_distances
from .network import BINARY, COUNT, Network, density, transitivity
from .sampler import ChainTrace


def _offdiag(values: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    return values[~np.eye(n, dtype=bool)]


def replicate_network(
    draw: tuple[np.ndarray, float],
    kind: str,
    rng: np.random.Generator,
    directed: bool = True,
) -> Network:
    """Simulate one network from a posterior draw (Z, alpha).

    Edges are independent Bernoulli or Poisson draws per dyad. Undirected
    replicates sample each unordered pair once and mirror it, so the
    per-dyad variance matches an undirected observation.
    """
    Z, alpha = draw
    n = Z.shape[0]
    mean = edge_mean(alpha, pairwise_sq_distances(Z), link_for_kind(kind))
    if kind == BINARY:
        edges = (rng.random((n, n)) < mean).astype(np.int64)
    elif kind == COUNT:
        edges = rng.poisson(mean).astype(np.int64)
    else:
        raise ValueError(f"unknown edge kind {kind!r}")
    if not directed:
        edges = np.tril(edges, -1)
        edges = edges + edges.T
    np.fill_diagonal(edges, 0)
    return Network(edges, kind=kind, directed=directed)


def _check_binary_pair(obs: Network, rep: Network):
    if obs.kind != BINARY or rep.kind != BINARY:
        raise ValueError("metric is defined for binary networks only")
    if obs.n != rep.n:
        raise ValueError("networks must have the same number of nodes")


def accuracy_f1(obs: Network, rep: Network) -> tuple[float, float]:
    """Edge-prediction accuracy and F1 score over ordered pairs.

    F1 is 0 when precision + recall is 0 (no true or predicted edges).
    """
    _check_binary_pair(obs, rep)
    y = _offdiag(obs.edges)
    r = _offdiag(rep.edges)
    tp = int(np.sum((y == 1) & (r == 1)))
    tn = int(np.sum((y == 0) & (r == 0)))
    fp = int(np.sum((y == 0) & (r == 1)))
    fn = int(np.sum((y == 1) & (r == 0)))
    accuracy = (tp + tn) / y.size
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return accuracy, f1


def hamming(obs: Network, rep: Network) -> float:
    """Fraction of ordered dyads whose indicators differ (equals 1 - accuracy)."""
    _check_binary_pair(obs, rep)
    return float(np.abs(_offdiag(obs.edges) - _offdiag(rep.edges)).mean())


def count_frequency_table(net: Network, max_count: int = 10) -> np.ndarray:
    """Frequencies of counts 0..max_count plus an overflow bucket."""
    if net.kind != COUNT:
        raise ValueError("frequency table is defined for count networks")
    values = _offdiag(net.edges)
    table = np.zeros(max_count + 2, dtype=np.int64)
    clipped = np.minimum(values, max_count + 1)
    np.add.at(table, clipped, 1)
    return table


def mean_absolute_difference(obs: Network, rep: Network) -> float:
    """Mean absolute difference of counts over ordered dyads."""
    if obs.kind != COUNT or rep.kind != COUNT:
        raise ValueError("mean absolute difference is defined for count networks")
    if obs.n != rep.n:
        raise ValueError("networks must have the same number of nodes")
    return float(np.abs(_offdiag(obs.edges) - _offdiag(rep.edges)).mean())


def pseudo_r2(obs: Network, lambda_hat: np.ndarray) -> float:
    """Deviance-based R^2 of fitted Poisson rates against observed counts.

    1 for the saturated fit (lambda = y), 0 for the constant-rate null
    fit. Terms with y = 0 contribute -lambda + ybar to the numerator and
    nothing to the denominator (y log y -> 0 convention). Undefined (NaN)
    when all counts are equal.
    """
    if obs.kind != COUNT:
        raise ValueError("pseudo R^2 is defined for count networks")
    lambda_hat = np.asarray(lambda_hat, dtype=np.float64)
    if lambda_hat.shape != obs.edges.shape:
        raise ValueError("rate matrix must match the adjacency shape")
    y = _offdiag(obs.edges).astype(np.float64)
    lam = _offdiag(lambda_hat)
    if np.any(lam <= 0):
        raise ValueError("fitted rates must be positive off the diagonal")
    ybar = y.mean()
    denom = float(xlogy(y, y / ybar).sum()) if ybar > 0 else 0.0
    if denom == 0.0:
        return float("nan")
    num = float((xlogy(y, lam / ybar) - lam + ybar).sum())
    return num / denom


def distance_ratio_distribution(Z_hat: np.ndarray, Z_true: np.ndarray) -> np.ndarray:
    """Ratios of estimated to true pairwise Euclidean distances (i < j)."""
    if Z_hat.shape[0] != Z_true.shape[0]:
        raise ValueError("configurations must have the same number of rows")
    iu = np.triu_indices(Z_hat.shape[0], k=1)
    d_hat = np.sqrt(pairwise_sq_distances(Z_hat)[iu])
    d_true = np.sqrt(pairwise_sq_distances(Z_true)[iu])
    if np.any(d_true == 0):
        raise ValueError("true configuration has coincident points")
    return d_hat / d_true


@dataclass
class PpcReport:
    """Per-replicate metric records plus aggregate summaries."""

    kind: str
    n_replicates: int
    observed: dict
    records: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    pseudo_r2: float | None = None
    distance_ratio_stats: dict | None = None

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and np.isnan(v):
                return None
            if isinstance(v, np.ndarray):
                return v.tolist()
            return v

        return {
            "kind": self.kind,
            "n_replicates": self.n_replicates,
            "observed": {k: clean(v) for k, v in self.observed.items()},
            "records": [{k: clean(v) for k, v in r.items()} for r in self.records],
            "aggregates": {
                k: {kk: clean(vv) for kk, vv in v.items()}
                for k, v in self.aggregates.items()
            },
            "pseudo_r2": clean(self.pseudo_r2),
            "distance_ratio_stats": (
                None
                if self.distance_ratio_stats is None
                else {k: clean(v) for k, v in self.distance_ratio_stats.items()}
            ),
        }


def _band(values: np.ndarray) -> dict:
    return {
        "mean": float(values.mean()),
        "lower": float(np.quantile(values, 0.025)),
        "upper": float(np.quantile(values, 0.975)),
    }


def run_ppc(
    traces,
    net: Network,
    n_replicates: int,
    rng: np.random.Generator,
    Z_true: np.ndarray | None = None,
    max_count: int = 10,
) -> PpcReport:
    """Draw replicate networks from pooled posterior states and score them.

    States are sampled uniformly from the pooled thinned draws. The count
    pseudo R^2 uses the posterior-mean rate matrix over all pooled draws,
    and distance ratios (when the truth is known) use the posterior-mean
    configuration of aligned draws.
    """
    if isinstance(traces, ChainTrace):
        traces = [traces]
    if not traces or any(len(t) == 0 for t in traces):
        raise ValueError("posterior predictive checks need non-empty traces")
    z_pool = np.concatenate([t.Z for t in traces], axis=0)
    alpha_pool = np.concatenate([t.alpha for t in traces])

    observed = {"density": density(net)}
    if net.kind == BINARY:
        observed["transitivity"] = transitivity(net)
    else:
        observed["count_frequencies"] = count_frequency_table(net, max_count)

    report = PpcReport(kind=net.kind, n_replicates=n_replicates, observed=observed)

    link = link_for_kind(net.kind)
    if net.kind == COUNT:
        lam_mean = np.zeros((net.n, net.n))
        for t in range(z_pool.shape[0]):
            lam_mean += edge_mean(alpha_pool[t], pairwise_sq_distances(z_pool[t]), link)
        lam_mean /= z_pool.shape[0]
        np.fill_diagonal(lam_mean, 1.0)  # unused off-diagonal guard value
        report.pseudo_r2 = pseudo_r2(net, lam_mean)

    if Z_true is not None:
        z_hat = z_pool.mean(axis=0)
        ratios = distance_ratio_distribution(z_hat[:, : Z_true.shape[1]], Z_true)
        report.distance_ratio_stats = {
            "mean": float(ratios.mean()),
            "median": float(np.median(ratios)),
            "lower": float(np.quantile(ratios, 0.025)),
            "upper": float(np.quantile(ratios, 0.975)),
        }

    if n_replicates == 0:
        return report

    idx = rng.integers(z_pool.shape[0], size=n_replicates)
    freq_tables = []
    for t in idx:
        rep = replicate_network(
            (z_pool[t], alpha_pool[t]), net.kind, rng, directed=net.directed
        )
        record = {"draw_index": int(t), "density": density(rep)}
        if net.kind == BINARY:
            acc, f1 = accuracy_f1(net, rep)
            record.update(
                transitivity=transitivity(rep),
                accuracy=acc,
                f1=f1,
                hamming=hamming(net, rep),
            )
        else:
            record.update(
                mean_absolute_difference=mean_absolute_difference(net, rep),
            )
            freq_tables.append(count_frequency_table(rep, max_count))
        report.records.append(record)

    scalar_metrics = [k for k in report.records[0] if k != "draw_index"]
    for metric in scalar_metrics:
        values = np.array([r[metric] for r in report.records], dtype=np.float64)
        report.aggregates[metric] = _band(values)
    if freq_tables:
        stacked = np.vstack(freq_tables).astype(np.float64)
        report.aggregates["count_frequencies"] = {
            "mean": stacked.mean(axis=0),
            "lower": np.quantile(stacked, 0.025, axis=0),
            "upper": np.quantile(stacked, 0.975, axis=0),
        }
    return report
