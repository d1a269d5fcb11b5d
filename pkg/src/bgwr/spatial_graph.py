"""Areal adjacency graphs, all-pairs distances, and classical MDS embedding.

Administrative units are vertices of an undirected graph; an edge joins two
units that share a boundary.  Graph distance is the hop count of the shortest
path.  Disconnected pairs carry the sentinel ``UNREACHABLE`` (infinity), which
every weighting kernel maps to weight zero.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

UNREACHABLE = np.inf


class GraphError(ValueError):
    """Raised for structurally invalid graph input."""


@dataclass(frozen=True)
class SpatialGraph:
    """Undirected graph over areal units.

    ``patches`` records manually added edges (e.g. an island linked to the
    mainland); they are also present in ``edges``.
    """

    vertices: tuple
    edges: frozenset
    patches: tuple

    @property
    def n(self):
        return len(self.vertices)

    def neighbors(self, v):
        return sorted(u for e in self.edges for u in e if v in e and u != v)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric all-pairs distance with labeled rows/columns.

    ``kind`` is ``"graph"`` (hop counts, possibly UNREACHABLE) or
    ``"euclidean"``.
    """

    labels: tuple
    values: np.ndarray
    kind: str

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        n = len(self.labels)
        if self.values.shape != (n, n):
            raise ValueError("distance matrix shape does not match labels")

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown location id: {label!r}") from None

    def get(self, a, b):
        return self.values[self.index(a), self.index(b)]

    def submatrix(self, labels):
        idx = [self.index(x) for x in labels]
        return self.values[np.ix_(idx, idx)]

    def to_csv(self, path):
        """Write as CSV: header of labels, 'inf' for unreachable entries."""
        with open(path, "w") as fh:
            fh.write("location," + ",".join(self.labels) + "\n")
            for lab, row in zip(self.labels, self.values):
                cells = ["inf" if np.isinf(v) else format(v, ".17g") for v in row]
                fh.write(lab + "," + ",".join(cells) + "\n")

    @classmethod
    def from_csv(cls, path, kind="graph"):
        with open(path) as fh:
            header = fh.readline().strip().split(",")[1:]
            rows = []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                cells = line.split(",")
                rows.append([np.inf if c == "inf" else float(c) for c in cells[1:]])
        return cls(labels=tuple(header), values=np.array(rows), kind=kind)


@dataclass(frozen=True)
class MdsEmbedding:
    """2-D classical MDS coordinates, one row per location."""

    labels: tuple
    coords: np.ndarray
    eigenvalues: np.ndarray


def build_graph(vertices, edges, patches=()):
    """Validate and assemble a SpatialGraph.

    Duplicate edges are deduplicated; patch edges are merged into the edge
    set.  Rejects self-loops and edges referencing unknown vertices.
    """
    vertices = tuple(vertices)
    if len(set(vertices)) != len(vertices):
        raise GraphError("duplicate vertex ids")
    known = set(vertices)
    patches = tuple(tuple(p) for p in patches)
    edge_set = set()
    for a, b in list(edges) + list(patches):
        if a == b:
            raise GraphError(f"self-loop on vertex {a!r}")
        if a not in known or b not in known:
            raise GraphError(f"edge ({a!r}, {b!r}) references unknown vertex")
        edge_set.add(frozenset((a, b)))
    return SpatialGraph(vertices=vertices, edges=frozenset(edge_set), patches=patches)


def graph_distances(g):
    """All-pairs hop-count distance via per-source BFS.

    Disconnected pairs get UNREACHABLE; this is a value, not an error.
    """
    if g.n == 0:
        raise GraphError("empty graph")
    index = {v: i for i, v in enumerate(g.vertices)}
    adj = [[] for _ in range(g.n)]
    for e in g.edges:
        a, b = tuple(e)
        adj[index[a]].append(index[b])
        adj[index[b]].append(index[a])
    values = np.full((g.n, g.n), UNREACHABLE)
    for s in range(g.n):
        values[s, s] = 0.0
        q = deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if np.isinf(values[s, v]):
                    values[s, v] = values[s, u] + 1
                    q.append(v)
    return DistanceMatrix(labels=g.vertices, values=values, kind="graph")


def euclidean_distances(labels, coords):
    """Pairwise sqrt((lat_i-lat_j)^2 + (lon_i-lon_j)^2)."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape != (len(labels), 2):
        raise ValueError("coords must be an (n, 2) array of (latitude, longitude)")
    if not np.isfinite(coords).all():
        raise ValueError("non-finite coordinate")
    diff = coords[:, None, :] - coords[None, :, :]
    values = np.sqrt((diff ** 2).sum(axis=2))
    return DistanceMatrix(labels=tuple(labels), values=values, kind="euclidean")


def mds_embed(d):
    """Classical MDS of a distance matrix into two dimensions.

    Double-centers the squared distances, takes the top-2 eigenpairs, and
    scales eigenvectors by sqrt of the (zero-clamped) eigenvalues.  Sign
    convention: within each coordinate column the entry of largest absolute
    value is made positive, so the embedding is deterministic.
    """
    if np.isinf(d.values).any():
        raise ValueError("distance matrix contains UNREACHABLE entries")
    n = len(d.labels)
    if n < 3:
        raise ValueError("MDS embedding requires at least 3 locations")
    D2 = d.values ** 2
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ D2 @ J
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1][:2]
    top = np.clip(evals[order], 0.0, None)
    coords = evecs[:, order] * np.sqrt(top)
    for k in range(2):
        col = coords[:, k]
        if np.any(col != 0) and col[np.argmax(np.abs(col))] < 0:
            coords[:, k] = -col
    return MdsEmbedding(labels=d.labels, coords=coords, eigenvalues=top)
