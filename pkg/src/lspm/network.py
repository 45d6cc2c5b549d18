"""Network representation, CSV ingestion, and graph statistics.

Networks are square non-negative integer adjacency matrices with a zero
diagonal (no self-loops). Binary networks restrict entries to {0, 1};
count networks allow any non-negative integer. Undirected networks are
stored as symmetric matrices, and statistics iterate over ordered pairs
i != j so that directed and undirected conventions agree.
"""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

BINARY = "binary"
COUNT = "count"
KINDS = (BINARY, COUNT)


class NetworkFormatError(ValueError):
    """Raised when a file or matrix violates the network contract."""


@dataclass(frozen=True)
class Network:
    """Adjacency matrix plus an edge-type tag and a directedness flag.

    Parameters
    ----------
    edges : ndarray of shape (n, n)
        Non-negative integer entries, zero diagonal. Symmetric when
        ``directed`` is False.
    kind : str
        Either ``"binary"`` or ``"count"``.
    directed : bool
        Whether asymmetric dyads are permitted.
    """

    edges: np.ndarray
    kind: str
    directed: bool = False

    def __post_init__(self):
        edges = np.asarray(self.edges)
        if edges.ndim != 2 or edges.shape[0] != edges.shape[1]:
            raise NetworkFormatError(
                f"adjacency matrix must be square, got shape {edges.shape}"
            )
        if edges.shape[0] < 1:
            raise NetworkFormatError("network must contain at least one node")
        if not np.issubdtype(edges.dtype, np.integer):
            rounded = np.round(edges)
            if not np.all(np.isfinite(edges)) or not np.array_equal(edges, rounded):
                raise NetworkFormatError("edge values must be integers")
            edges = rounded
        edges = edges.astype(np.int64)
        if (edges < 0).any():
            i, j = np.argwhere(edges < 0)[0]
            raise NetworkFormatError(f"negative entry at ({i}, {j})")
        diag = np.diagonal(edges)
        if diag.any():
            i = int(np.nonzero(diag)[0][0])
            raise NetworkFormatError(f"self-loop at node {i}: diagonal must be zero")
        if self.kind not in KINDS:
            raise NetworkFormatError(f"unknown edge kind {self.kind!r}")
        if self.kind == BINARY and edges.max(initial=0) > 1:
            i, j = np.argwhere(edges > 1)[0]
            raise NetworkFormatError(
                f"binary network has entry {edges[i, j]} at ({i}, {j})"
            )
        if not self.directed and not np.array_equal(edges, edges.T):
            raise NetworkFormatError("undirected network must be symmetric")
        edges.flags.writeable = False
        object.__setattr__(self, "edges", edges)

    @property
    def n(self) -> int:
        return self.edges.shape[0]

    def binarized(self) -> np.ndarray:
        """0/1 copy of the adjacency matrix (entries > 0 become 1)."""
        return (self.edges > 0).astype(np.int64)


def _parse_rows(path):
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.reader(fh):
            cells = [c.strip() for c in raw if c.strip() != ""]
            if cells:
                rows.append(cells)
    if not rows:
        raise NetworkFormatError(f"{path}: file contains no data")
    return rows


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_network(
    path,
    kind: str,
    directed: bool = False,
    fmt: str = "auto",
    index_base: int = 1,
) -> Network:
    """Load a network from an edge-list or dense adjacency CSV.

    Edge lists have columns ``from,to[,count]`` (header optional) with node
    labels interpreted as integers offset by ``index_base``. Dense files
    have n rows of n comma-separated values. With ``fmt="auto"``, a file
    whose row count equals its column count is treated as dense; otherwise
    2- or 3-column files are treated as edge lists.

    Undirected input is symmetrized by the elementwise maximum of the
    (i, j) and (j, i) entries.
    """
    if fmt not in ("auto", "dense", "edgelist"):
        raise ValueError(f"unknown format {fmt!r}")
    if index_base not in (0, 1):
        raise ValueError("index_base must be 0 or 1")
    rows = _parse_rows(path)

    header = not all(_is_number(tok) for tok in rows[0])
    body = rows[1:] if header else rows
    if not body:
        raise NetworkFormatError(f"{path}: no rows after header")

    if fmt == "auto":
        widths = {len(r) for r in body}
        if len(widths) == 1 and len(body) == next(iter(widths)):
            fmt = "dense"
        elif widths <= {2, 3}:
            fmt = "edgelist"
        else:
            fmt = "dense"

    if fmt == "dense":
        if header:
            raise NetworkFormatError(f"{path}: dense matrix cannot have a header row")
        try:
            matrix = np.array([[float(tok) for tok in r] for r in body])
        except ValueError as exc:
            raise NetworkFormatError(f"{path}: {exc}") from None
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise NetworkFormatError(
                f"{path}: dense matrix is not square (shape {matrix.shape})"
            )
    else:
        n_max = -1
        entries = []
        for lineno, r in enumerate(body, start=2 if header else 1):
            if len(r) not in (2, 3):
                raise NetworkFormatError(
                    f"{path}:{lineno}: edge rows need 2 or 3 columns, got {len(r)}"
                )
            try:
                i = int(r[0]) - index_base
                j = int(r[1]) - index_base
                w = float(r[2]) if len(r) == 3 else 1.0
            except ValueError as exc:
                raise NetworkFormatError(f"{path}:{lineno}: {exc}") from None
            if i < 0 or j < 0:
                raise NetworkFormatError(
                    f"{path}:{lineno}: node index below index base {index_base}"
                )
            if i == j and w != 0:
                raise NetworkFormatError(
                    f"{path}:{lineno}: self-loop on node {r[0]} is not allowed"
                )
            n_max = max(n_max, i, j)
            entries.append((i, j, w))
        matrix = np.zeros((n_max + 1, n_max + 1))
        for i, j, w in entries:
            matrix[i, j] = w

    if not directed:
        matrix = np.maximum(matrix, matrix.T)
    try:
        return Network(matrix, kind=kind, directed=directed)
    except NetworkFormatError as exc:
        raise NetworkFormatError(f"{path}: {exc}") from None


def save_network(net: Network, path) -> None:
    """Write the dense adjacency matrix as integer CSV (round-trip safe)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in net.edges:
            writer.writerow([int(v) for v in row])


def density(net: Network) -> float:
    """Fraction of ordered node pairs i != j joined by an edge."""
    n = net.n
    if n < 2:
        raise ValueError("density requires at least 2 nodes")
    off_diag = np.count_nonzero(net.edges) - np.count_nonzero(np.diagonal(net.edges))
    return off_diag / (n * (n - 1))


def transitivity(net: Network) -> float:
    """Global clustering: 3 * triangles / connected triples.

    Counts are binarized at > 0 and directed networks are symmetrized,
    since the statistic is defined for undirected binary graphs. Returns
    0 when the graph has no connected triples.
    """
    a = net.binarized()
    a = np.maximum(a, a.T)
    degrees = a.sum(axis=1)
    triples = int(np.sum(degrees * (degrees - 1)) // 2)
    if triples == 0:
        return 0.0
    closed = int(np.trace(a @ a @ a))  # 6 * number of triangles
    return (closed / 2) / triples


def geodesic_distances(net: Network) -> np.ndarray:
    """Shortest-path hop counts on the binarized, symmetrized graph.

    Unreachable pairs are imputed as (max finite distance + 1) so the
    result is always finite, which keeps downstream multidimensional
    scaling well defined on disconnected graphs.
    """
    a = net.binarized()
    a = np.maximum(a, a.T)
    n = net.n
    neighbors = [np.nonzero(a[i])[0] for i in range(n)]
    dist = np.full((n, n), -1, dtype=np.int64)
    for src in range(n):
        dist[src, src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            du = dist[src, u]
            for v in neighbors[u]:
                if dist[src, v] < 0:
                    dist[src, v] = du + 1
                    queue.append(v)
    finite_max = int(dist.max())
    out = dist.astype(np.float64)
    out[dist < 0] = finite_max + 1
    return out
