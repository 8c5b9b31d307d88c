"""Weighted graphs: family generators, equitable quotients, pendant edges, loops.

Vertices are numbered from 1 in every public function, matching the chain
labels used in the analysis (``attach_pendant(g, 1, w)`` hangs an edge on the
first vertex).  The stored numpy arrays are of course 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidVertex, InvalidWeight, NotSymmetric, UnsupportedKind, UnsupportedSize


class FamilyKind(str, Enum):
    PATH = "path"
    CYCLE = "cycle"
    COMPLETE = "complete"
    STAR = "star"
    HYPERCUBE = "hypercube"
    BARBELL = "barbell"
    LOLLIPOP = "lollipop"
    NECKLACE = "necklace"
    ROOK = "rook"


def as_kind(kind) -> FamilyKind:
    try:
        return FamilyKind(kind)
    except ValueError:
        raise UnsupportedKind(f"unknown graph family {kind!r}") from None


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric weighted adjacency structure.

    ``weights`` holds the edge weights with a zero diagonal; self-loop weights
    live in ``loops``.  The Hamiltonian of the walk is :attr:`matrix`.
    """

    weights: np.ndarray
    loops: np.ndarray = None
    labels: Optional[tuple] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise UnsupportedSize(f"weights must be a non-empty square matrix, got shape {w.shape}")
        if not np.array_equal(w, w.T):
            raise NotSymmetric("edge weights must be exactly symmetric")
        n = w.shape[0]
        diag = np.diag(w).copy()
        np.fill_diagonal(w, 0.0)
        loops = np.zeros(n) if self.loops is None else np.array(self.loops, dtype=float).reshape(n)
        loops = loops + diag
        w.flags.writeable = False
        loops.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "loops", loops)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != n:
                raise UnsupportedSize("one label per vertex required")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_matrix(cls, H, name: str = "") -> "WeightedGraph":
        """Split a symmetric matrix into edge weights and loop weights."""
        H = np.asarray(H, dtype=float)
        return cls(weights=H - np.diag(np.diag(H)), loops=np.diag(H).copy(), name=name)

    @property
    def order(self) -> int:
        return self.weights.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.weights + np.diag(self.loops)

    def edges(self):
        """List of ``(j, k, w)`` with ``j < k``, 1-based."""
        j, k = np.nonzero(np.triu(self.weights, 1))
        return [(int(a) + 1, int(b) + 1, float(self.weights[a, b])) for a, b in zip(j, k)]

    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def scaled(self, factor: float) -> "WeightedGraph":
        return WeightedGraph(self.weights * factor, self.loops * factor, self.labels, self.name)

    def is_connected(self) -> bool:
        from scipy.sparse.csgraph import connected_components

        ncomp, _ = connected_components(self.weights != 0, directed=False)
        return ncomp == 1

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "edges": [[j, k, w] for j, k, w in self.edges()],
            "loops": [float(x) for x in self.loops],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedGraph":
        n = int(data["order"])
        w = np.zeros((n, n))
        for j, k, x in data["edges"]:
            w[j - 1, k - 1] = w[k - 1, j - 1] = float(x)
        loops = data.get("loops") or [0.0] * n
        return cls(w, np.asarray(loops, dtype=float))

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        nm = f" {self.name!r}" if self.name else ""
        return f"<WeightedGraph{nm} order={self.order} edges={len(self.edges())}>"


def _check_vertex(g: WeightedGraph, v) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 1 <= v <= g.order:
        raise InvalidVertex(f"vertex {v!r} is not in 1..{g.order}")
    return int(v) - 1


def _adjacency(n: int, edges) -> np.ndarray:
    A = np.zeros((n, n))
    for j, k in edges:
        A[j, k] = A[k, j] = 1.0
    return A


def _clique_edges(vertices: Sequence[int]):
    vs = list(vertices)
    return [(vs[i], vs[j]) for i in range(len(vs)) for j in range(i + 1, len(vs))]


def generate(kind, size: int) -> WeightedGraph:
    """Unit-weight adjacency structure of a named family.

    ``size`` is the vertex count except for ``hypercube`` (dimension d, giving
    2**d vertices) and ``barbell``/``lollipop`` (clique size N, giving 3N-2 and
    2N-1 vertices).  ``rook`` takes N = m*m.
    """
    kind = as_kind(kind)
    if isinstance(size, bool) or not isinstance(size, (int, np.integer)) or size < 1:
        raise UnsupportedSize(f"size must be a positive integer, got {size!r}")
    size = int(size)
    name = f"{kind.value}({size})"

    if kind is FamilyKind.PATH:
        A = _adjacency(size, [(i, i + 1) for i in range(size - 1)])
    elif kind is FamilyKind.CYCLE:
        if size < 3:
            raise UnsupportedSize("cycle needs at least 3 vertices")
        A = _adjacency(size, [(i, (i + 1) % size) for i in range(size)])
    elif kind is FamilyKind.COMPLETE:
        A = _adjacency(size, _clique_edges(range(size)))
    elif kind is FamilyKind.STAR:
        if size < 2:
            raise UnsupportedSize("star needs at least 2 vertices")
        A = _adjacency(size, [(0, i) for i in range(1, size)])
    elif kind is FamilyKind.HYPERCUBE:
        if size > 16:
            raise UnsupportedSize("hypercube dimension above 16 does not fit dense storage")
        n = 1 << size
        A = _adjacency(n, [(x, x ^ (1 << k)) for x in range(n) for k in range(size) if x < x ^ (1 << k)])
    elif kind is FamilyKind.BARBELL:
        if size < 3:
            raise UnsupportedSize("barbell needs clique size N >= 3")
        N = size
        left = list(range(N))  # vertex N-1 is the path leaf
        inner = list(range(N, 2 * N - 2))
        right = list(range(2 * N - 2, 3 * N - 2))  # vertex 2N-2 is the path leaf
        chain = [left[-1]] + inner + [right[0]]
        edges = _clique_edges(left) + _clique_edges(right)
        edges += [(chain[i], chain[i + 1]) for i in range(len(chain) - 1)]
        A = _adjacency(3 * N - 2, edges)
    elif kind is FamilyKind.LOLLIPOP:
        if size < 2:
            raise UnsupportedSize("lollipop needs clique size N >= 2")
        N = size
        chain = [N - 1] + list(range(N, 2 * N - 1))
        edges = _clique_edges(range(N)) + [(chain[i], chain[i + 1]) for i in range(len(chain) - 1)]
        A = _adjacency(2 * N - 1, edges)
    elif kind is FamilyKind.NECKLACE:
        if size % 3:
            raise UnsupportedSize("necklace size must be a multiple of 3")
        edges = []
        for t in range(size // 3):
            a, b, c = 3 * t, 3 * t + 1, 3 * t + 2
            edges += [(a, b), (b, c), (a, c)]
            if t:
                edges.append((a - 1, a))
        A = _adjacency(size, edges)
    elif kind is FamilyKind.ROOK:
        m = math.isqrt(size)
        if m * m != size or m < 2:
            raise UnsupportedSize("rook's graph needs N = m*m with m >= 2")
        edges = []
        for (i, j), (k, l) in product(product(range(m), repeat=2), repeat=2):
            u, v = i * m + j, k * m + l
            if u < v and (i == k or j == l):
                edges.append((u, v))
        A = _adjacency(size, edges)
    else:  # pragma: no cover
        raise UnsupportedKind(kind)
    return WeightedGraph(A, name=name)


def endpoints(kind, size: int) -> tuple[int, int]:
    """Default transfer endpoints (1-based) for a family member."""
    kind = as_kind(kind)
    if kind is FamilyKind.CYCLE:
        return 1, size // 2 + 1
    if kind is FamilyKind.STAR:
        return 2, size
    last = {
        FamilyKind.HYPERCUBE: 1 << size,
        FamilyKind.BARBELL: 3 * size - 2,
        FamilyKind.LOLLIPOP: 2 * size - 1,
    }.get(kind, size)
    # barbell: vertex 1 and the last vertex are the clique vertices away from
    # the path; lollipop: clique vertex 1 and the far end of the tail
    return 1, last


def attach_pendant(g: WeightedGraph, v: int, w: float) -> WeightedGraph:
    """New graph with one extra vertex joined only to ``v`` by weight ``w``."""
    i = _check_vertex(g, v)
    if not w > 0:
        raise InvalidWeight(f"pendant weight must be positive, got {w!r}")
    n = g.order
    W = np.zeros((n + 1, n + 1))
    W[:n, :n] = g.weights
    W[n, i] = W[i, n] = w
    labels = None if g.labels is None else g.labels + (f"pendant@{v}",)
    return WeightedGraph(W, np.append(g.loops, 0.0), labels, g.name)


def add_loop(g: WeightedGraph, v: int, B: float) -> WeightedGraph:
    i = _check_vertex(g, v)
    loops = g.loops.copy()
    loops[i] += B
    return WeightedGraph(g.weights, loops, g.labels, g.name)


def jacobi(diagonal, offdiagonal) -> WeightedGraph:
    """Weighted path (symmetric tridiagonal matrix)."""
    d = np.asarray(diagonal, dtype=float)
    e = np.asarray(offdiagonal, dtype=float)
    if e.shape[0] != d.shape[0] - 1:
        raise UnsupportedSize("need len(offdiagonal) == len(diagonal) - 1")
    W = np.diag(e, 1) + np.diag(e, -1)
    return WeightedGraph(W, d)


def clique_quotient_matrix(N: int) -> np.ndarray:
    s = math.sqrt(N - 2)
    return np.array([[0.0, s, 0.0], [s, N - 3.0, s], [0.0, s, 0.0]])


def quotient(kind, size: int) -> WeightedGraph:
    """Symmetrized quotient of an equitable partition, as a weighted path.

    complete
        3x3 matrix with cells {1}, {2..N-1}, {N}.  The two end cells are not
        joined, so this is strictly the quotient of K_N minus the edge {1, N};
        it has the zero mode (1, 0, -1)/sqrt(2).
    barbell
        (N+4)-vertex Jacobi matrix; the two clique ends reuse the 3x3 block.
    cycle
        C_{2m} folded about an antipodal pair: path on m+1 vertices with
        sqrt(2) on both end edges.
    """
    kind = as_kind(kind)
    if kind is FamilyKind.COMPLETE:
        if size < 3:
            raise UnsupportedSize("clique quotient needs N >= 3")
        return WeightedGraph.from_matrix(clique_quotient_matrix(size), name=f"quotient-complete({size})")
    if kind is FamilyKind.BARBELL:
        if size < 3:
            raise UnsupportedSize("barbell quotient needs N >= 3")
        N, s = size, math.sqrt(size - 2)
        off = [s, s] + [1.0] * (N - 1) + [s, s]
        diag = np.zeros(N + 4)
        diag[1] = diag[N + 2] = N - 3
        g = jacobi(diag, off)
        return WeightedGraph(g.weights, g.loops, name=f"quotient-barbell({size})")
    if kind is FamilyKind.CYCLE:
        if size < 4 or size % 2:
            raise UnsupportedSize("cycle quotient needs an even N >= 4")
        m = size // 2
        off = np.ones(m)
        off[0] = off[-1] = math.sqrt(2.0)
        g = jacobi(np.zeros(m + 1), off)
        return WeightedGraph(g.weights, g.loops, name=f"quotient-cycle({size})")
    raise UnsupportedKind(f"no quotient defined for {kind.value}")
