"""Simple graphs, matrix patterns and zero forcing.

Vertices are labelled ``1..order``. A blue vertex with exactly one
non-blue neighbour forces that neighbour; the set reached when no force
applies is the closure, and a set whose closure is every vertex is a
zero forcing set.
"""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from ._validation import as_square_matrix, as_vertex_list
from .exceptions import SearchBoundError

__all__ = [
    "SimpleGraph",
    "ForcingSequence",
    "graph_of_matrix",
    "is_combinatorially_symmetric",
    "forcing_closure",
    "is_zero_forcing_set",
    "min_zero_forcing_set",
    "is_connected",
    "path_graph",
    "cycle_graph",
    "grid_graph",
    "penta_sun",
]

DEFAULT_SEARCH_BOUND = 20


@dataclass(frozen=True)
class SimpleGraph:
    """Undirected graph without self-loops on vertices ``1..order``.

    Parameters
    ----------
    order : int
        Number of vertices.
    edges : iterable of pairs
        Each pair ``(i, j)`` with ``i != j``; orientation and duplicates are
        ignored and edges are stored as ``(min, max)``.
    """

    order: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be a positive integer, got {self.order!r}")
        object.__setattr__(self, "order", int(self.order))
        normalized = set()
        for e in self.edges:
            i, j = (int(x) for x in e)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            for v in (i, j):
                if not 1 <= v <= self.order:
                    raise ValueError(f"edge endpoint {v} outside 1..{self.order}")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @property
    def vertices(self):
        return range(1, self.order + 1)

    @cached_property
    def adjacency(self):
        """Mapping vertex -> frozenset of neighbours."""
        adj = {v: set() for v in self.vertices}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return {v: frozenset(n) for v, n in adj.items()}

    def neighbors(self, v):
        return self.adjacency[v]

    def degree(self, v):
        return len(self.adjacency[v])

    def has_edge(self, i, j):
        return (min(i, j), max(i, j)) in self.edges

    def adjacency_matrix(self):
        A = np.zeros((self.order, self.order), dtype=bool)
        for i, j in self.edges:
            A[i - 1, j - 1] = A[j - 1, i - 1] = True
        return A

    @cached_property
    def distances(self):
        """All-pairs hop distances (``order`` x ``order`` int array, -1 if unreachable)."""
        S = self.order
        D = np.full((S, S), -1, dtype=int)
        for s in self.vertices:
            D[s - 1, s - 1] = 0
            frontier = [s]
            d = 0
            while frontier:
                d += 1
                nxt = []
                for u in frontier:
                    for w in self.adjacency[u]:
                        if D[s - 1, w - 1] < 0:
                            D[s - 1, w - 1] = d
                            nxt.append(w)
                frontier = nxt
        return D

    def to_dict(self):
        return {"order": self.order, "edges": [list(e) for e in sorted(self.edges)]}

    @classmethod
    def from_dict(cls, data):
        return cls(data["order"], frozenset(tuple(e) for e in data["edges"]))


@dataclass(frozen=True)
class ForcingSequence:
    """Result of running the color-change rule from ``initial_set``.

    ``forces`` lists ``(forcer, forced)`` pairs in the order applied and
    ``snapshots[f]`` is the blue set just before force ``f``.
    """

    initial_set: frozenset
    forces: tuple
    closure: frozenset
    snapshots: tuple = ()

    def is_complete(self, order):
        return len(self.closure) == order


def graph_of_matrix(M, zero_tol=0.0):
    """Graph of the off-diagonal non-zero pattern of ``M``.

    Edge ``{i, j}`` is present when either ``|M_ij|`` or ``|M_ji|`` exceeds
    ``zero_tol``. The diagonal is ignored.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    M = as_square_matrix(M)
    nz = np.abs(M) > zero_tol
    nz = nz | nz.T
    np.fill_diagonal(nz, False)
    ii, jj = np.nonzero(np.triu(nz, 1))
    return SimpleGraph(M.shape[0], frozenset(zip((ii + 1).tolist(), (jj + 1).tolist())))


def is_combinatorially_symmetric(M, zero_tol=0.0):
    """True iff every off-diagonal non-zero ``M_ij`` has a non-zero ``M_ji``."""
    M = as_square_matrix(M)
    nz = np.abs(M) > zero_tol
    np.fill_diagonal(nz, False)
    return bool(np.array_equal(nz, nz.T))


def forcing_closure(G, Z):
    """Run zero forcing from ``Z`` on ``G``.

    Blue vertices are scanned in ascending label order and the first
    available force is applied before rescanning, so the returned force
    order is canonical. The closure itself does not depend on the order.

    Returns
    -------
    ForcingSequence
    """
    blue = set(as_vertex_list(Z, G.order, name="Z"))
    initial = frozenset(blue)
    forces = []
    snapshots = []
    while True:
        for k in sorted(blue):
            white = [w for w in G.adjacency[k] if w not in blue]
            if len(white) == 1:
                snapshots.append(frozenset(blue))
                forces.append((k, white[0]))
                blue.add(white[0])
                break
        else:
            break
    return ForcingSequence(initial, tuple(forces), frozenset(blue), tuple(snapshots))


def is_zero_forcing_set(G, Z):
    return forcing_closure(G, Z).is_complete(G.order)


def _closure_mask(nbr_masks, mask, full):
    # bitmask variant of forcing_closure for the exhaustive search
    changed = True
    while changed and mask != full:
        changed = False
        m = mask
        while m:
            low = m & -m
            v = low.bit_length() - 1
            m ^= low
            white = nbr_masks[v] & ~mask
            if white and white & (white - 1) == 0:
                mask |= white
                changed = True
    return mask


def min_zero_forcing_set(G, search_bound=DEFAULT_SEARCH_BOUND):
    """Minimum zero forcing set by exhaustive size-ascending search.

    Candidates of each size are tried in lexicographic order, so among the
    minimum sets the lexicographically smallest is returned. The search
    starts at the minimum degree (a lower bound on the zero forcing number)
    and skips any candidate contained in the closure of a set already known
    to fail, since its own closure cannot be larger.

    Raises
    ------
    SearchBoundError
        If ``G.order`` exceeds ``search_bound``.
    """
    S = G.order
    if S > search_bound:
        raise SearchBoundError(
            f"graph order {S} exceeds exhaustive search bound {search_bound}; "
            "raise the bound or use a heuristic"
        )
    nbr_masks = [0] * S
    for i, j in G.edges:
        nbr_masks[i - 1] |= 1 << (j - 1)
        nbr_masks[j - 1] |= 1 << (i - 1)
    full = (1 << S) - 1
    min_deg = min(G.degree(v) for v in G.vertices)
    failed = set()
    for size in range(max(1, min_deg), S + 1):
        for combo in combinations(range(S), size):
            mask = 0
            for v in combo:
                mask |= 1 << v
            if any(mask & f == mask for f in failed):
                continue
            closed = _closure_mask(nbr_masks, mask, full)
            if closed == full:
                return frozenset(v + 1 for v in combo)
            if closed != mask and len(failed) < 1024:
                failed.add(closed)
    raise AssertionError("unreachable: the full vertex set is always forcing")


def is_connected(G):
    seen = {1}
    stack = [1]
    while stack:
        u = stack.pop()
        for w in G.adjacency[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == G.order


def path_graph(n):
    return SimpleGraph(n, frozenset((i, i + 1) for i in range(1, n)))


def cycle_graph(n):
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return SimpleGraph(n, frozenset({(i, i + 1) for i in range(1, n)} | {(1, n)}))


def grid_graph(n, m):
    """``n`` x ``m`` lattice; vertex ``(r, c)`` gets label ``r * m + c + 1``."""
    edges = set()
    for r in range(n):
        for c in range(m):
            v = r * m + c + 1
            if c + 1 < m:
                edges.add((v, v + 1))
            if r + 1 < n:
                edges.add((v, v + m))
    return SimpleGraph(n * m, frozenset(edges))


def penta_sun():
    """The penta-sun H5 with the usual figure labelling.

    Cycle 2-3-4-8-7-2 with pendants 1-2, 6-3, 5-4, 10-8, 9-7.
    """
    cycle = [(2, 3), (3, 4), (4, 8), (8, 7), (7, 2)]
    pendants = [(1, 2), (6, 3), (5, 4), (10, 8), (9, 7)]
    return SimpleGraph(10, frozenset(cycle + pendants))
