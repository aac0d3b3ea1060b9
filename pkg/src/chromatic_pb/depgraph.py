"""Dependency graphs, fractional covers and chromatic-number computations.

Vertices are sample indices ``0..m-1``; an absent edge certifies that the two
samples are independent.  A fractional cover is a list of weighted
independent sets whose weights sum to exactly one at every vertex.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .simplex import solve_packing_lp

__all__ = [
    "DependencyGraph",
    "FractionalCover",
    "CoverStats",
    "ChiEstimates",
    "CliqueResult",
    "CoverError",
    "NotIndependent",
    "NotExact",
    "TooLarge",
    "validate_cover",
    "clique_number",
    "fractional_chromatic_exact",
    "greedy_chromatic_upper",
    "induced_subgraph",
    "chi_estimates",
    "maximal_independent_sets",
    "read_graph",
    "write_graph",
    "parse_graph",
    "format_graph",
]

EXACT_TOL = 1e-9
EXACT_CHI_MAX_VERTICES = 20
EXACT_CLIQUE_MAX_VERTICES = 64


class CoverError(ValueError):
    pass


class NotIndependent(CoverError):
    def __init__(self, element: int, edge: tuple[int, int]):
        super().__init__(f"cover element {element} contains edge {edge}")
        self.element = element
        self.edge = edge


class NotExact(CoverError):
    def __init__(self, vertex: int, total_weight: float):
        super().__init__(f"vertex {vertex} has total weight {total_weight}, expected 1")
        self.vertex = vertex
        self.total_weight = total_weight


class TooLarge(ValueError):
    def __init__(self, vertex_count: int, cap: int = EXACT_CHI_MAX_VERTICES):
        super().__init__(f"exact computation capped at {cap} vertices, got {vertex_count}")
        self.vertex_count = vertex_count
        self.cap = cap


@dataclass(frozen=True)
class DependencyGraph:
    """Undirected simple graph on ``vertex_count`` vertices."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...] = ()
    _adj: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        m = self.vertex_count
        if m < 1:
            raise ValueError(f"vertex_count must be positive, got {m}")
        norm = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < m and 0 <= j < m):
                raise ValueError(f"edge ({i}, {j}) out of range for {m} vertices")
            norm.add((min(i, j), max(i, j)))
        edges = tuple(sorted(norm))
        adj = [0] * m
        for i, j in edges:
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_adj", tuple(adj))

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[tuple[int, int]]) -> DependencyGraph:
        return cls(vertex_count, tuple((int(i), int(j)) for i, j in edges))

    @classmethod
    def complete(cls, n: int) -> DependencyGraph:
        return cls(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def cycle(cls, n: int) -> DependencyGraph:
        return cls(n, tuple((i, (i + 1) % n) for i in range(n)))

    @property
    def adjacency(self) -> tuple[int, ...]:
        """Neighbourhood of each vertex as an int bitset."""
        return self._adj

    def neighbors(self, v: int) -> list[int]:
        return _bits(self._adj[v])

    def degree(self, v: int) -> int:
        return self._adj[v].bit_count()

    def max_degree(self) -> int:
        return max(a.bit_count() for a in self._adj)

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self._adj[i] >> j & 1)

    def is_independent(self, vertices: Iterable[int]) -> bool:
        return self._first_edge_in(vertices) is None

    def _first_edge_in(self, vertices: Iterable[int]) -> tuple[int, int] | None:
        vs = sorted(vertices)
        mask = 0
        for v in vs:
            mask |= 1 << v
        for v in vs:
            hit = self._adj[v] & mask
            if hit:
                u = (hit & -hit).bit_length() - 1
                return (min(u, v), max(u, v))
        return None


@dataclass(frozen=True)
class FractionalCover:
    """Weighted vertex sets ``(C_j, w_j)`` over a graph of ``graph_size`` vertices.

    Weights may be ``int``/``Fraction`` (exact) or ``float``.
    """

    elements: tuple[tuple[tuple[int, ...], Real], ...]
    graph_size: int

    def __post_init__(self) -> None:
        elems = []
        for verts, w in self.elements:
            vs = tuple(sorted(int(v) for v in verts))
            if len(set(vs)) != len(vs):
                raise CoverError(f"duplicate vertex in cover element {vs}")
            if not (0 < w <= 1):
                raise CoverError(f"cover weight {w} outside (0, 1]")
            if vs and (vs[0] < 0 or vs[-1] >= self.graph_size):
                raise CoverError(f"cover element {vs} out of range")
            elems.append((vs, w))
        object.__setattr__(self, "elements", tuple(elems))

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[int]], weights: Iterable[Real] | Real, graph_size: int):
        sets = [tuple(s) for s in sets]
        if isinstance(weights, Real):
            weights = [weights] * len(sets)
        return cls(tuple(zip(sets, weights)), graph_size)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def sets(self) -> list[tuple[int, ...]]:
        return [s for s, _ in self.elements]

    @property
    def weights(self) -> list[Real]:
        return [w for _, w in self.elements]

    @property
    def weight(self) -> Real:
        """Chromatic weight, the sum of element weights."""
        return sum(self.weights)


@dataclass(frozen=True)
class CoverStats:
    omega: Real
    alpha: list[float]
    pi: list[float]


@dataclass(frozen=True)
class ChiEstimates:
    clique_lower: int
    chi_star: Fraction | None
    chi_upper: int
    delta_plus_one: int
    clique_exact: bool = True

    def chain_holds(self) -> bool:
        chain = [self.clique_lower]
        if self.chi_star is not None:
            chain.append(self.chi_star)
        chain += [self.chi_upper, self.delta_plus_one]
        return 1 <= chain[0] and all(a <= b for a, b in zip(chain, chain[1:]))


@dataclass(frozen=True)
class CliqueResult:
    size: int
    exact: bool
    witness: tuple[int, ...]

    def __int__(self) -> int:
        return self.size


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _is_exact_number(x) -> bool:
    return isinstance(x, (int, Fraction))


def validate_cover(
    graph: DependencyGraph, cover: FractionalCover, *, n_checks: int = 10, seed: int = 0
) -> CoverStats:
    """Check that ``cover`` is a proper exact fractional cover of ``graph``.

    Raises :class:`NotIndependent` or :class:`NotExact` naming the offender.
    The summation identity ``sum_i t_i = sum_j w_j sum_{k in C_j} t_k`` is
    also checked on ``n_checks`` random vectors.
    """
    if cover.graph_size != graph.vertex_count:
        raise CoverError(
            f"cover built for {cover.graph_size} vertices, graph has {graph.vertex_count}"
        )
    for j, (verts, _) in enumerate(cover.elements):
        edge = graph._first_edge_in(verts)
        if edge is not None:
            raise NotIndependent(j, edge)

    m = graph.vertex_count
    exact = all(_is_exact_number(w) for w in cover.weights)
    totals: list = [Fraction(0) if exact else 0.0] * m
    for verts, w in cover.elements:
        for v in verts:
            totals[v] += w
    for i, tot in enumerate(totals):
        if abs(tot - 1) > EXACT_TOL:
            raise NotExact(i, float(tot))

    rng = random.Random(seed)
    fw = [float(w) for w in cover.weights]
    for _ in range(n_checks):
        t = [rng.uniform(-1.0, 1.0) for _ in range(m)]
        lhs = sum(t)
        rhs = sum(w * sum(t[k] for k in verts) for w, (verts, _) in zip(fw, cover.elements))
        if abs(lhs - rhs) > 1e-6 * sum(abs(x) for x in t):
            raise CoverError(f"summation identity fails: {lhs} != {rhs}")

    omega = cover.weight
    omega_f = float(omega)
    alpha = [w / omega_f for w in fw]
    pi = [w * len(verts) / m for w, (verts, _) in zip(fw, cover.elements)]
    return CoverStats(omega=omega, alpha=alpha, pi=pi)


def _max_clique(adj: Sequence[int], n: int) -> tuple[int, ...]:
    # Branch and bound over bitsets with a greedy-colouring bound.
    best: list[int] = []

    def color_bound(cand: int) -> list[tuple[int, int]]:
        # Returns (vertex, colour) in increasing colour order.
        order = []
        colour = 0
        rest = cand
        while rest:
            colour += 1
            avail = rest
            while avail:
                low = avail & -avail
                v = low.bit_length() - 1
                avail &= ~low & ~adj[v]
                rest &= ~low
                order.append((v, colour))
        return order

    def expand(clique: list[int], cand: int) -> None:
        nonlocal best
        order = color_bound(cand)
        for v, colour in reversed(order):
            if len(clique) + colour <= len(best):
                return
            clique.append(v)
            new_cand = cand & adj[v]
            if new_cand:
                expand(clique, new_cand)
            elif len(clique) > len(best):
                best = clique.copy()
            clique.pop()
            cand &= ~(1 << v)

    expand([], (1 << n) - 1)
    return tuple(sorted(best))


def _greedy_clique(graph: DependencyGraph) -> tuple[int, ...]:
    adj = graph.adjacency
    best: tuple[int, ...] = ()
    for start in range(graph.vertex_count):
        clique = [start]
        cand = adj[start]
        while cand:
            v = max(_bits(cand), key=lambda u: (adj[u] & cand).bit_count())
            clique.append(v)
            cand &= adj[v]
        if len(clique) > len(best):
            best = tuple(sorted(clique))
    return best


def clique_number(graph: DependencyGraph) -> CliqueResult:
    """Order of the largest clique.

    Exact for graphs of at most 64 vertices; above that a greedy clique is
    returned with ``exact=False`` (a lower bound on the clique number).
    """
    if graph.vertex_count <= EXACT_CLIQUE_MAX_VERTICES:
        w = _max_clique(graph.adjacency, graph.vertex_count)
        return CliqueResult(len(w), True, w)
    w = _greedy_clique(graph)
    return CliqueResult(len(w), False, w)


def maximal_independent_sets(graph: DependencyGraph) -> Iterator[tuple[int, ...]]:
    """Bron-Kerbosch with pivoting on the complement graph."""
    n = graph.vertex_count
    full = (1 << n) - 1
    comp = [full & ~a & ~(1 << v) for v, a in enumerate(graph.adjacency)]

    def bk(r: int, p: int, x: int) -> Iterator[int]:
        if not p and not x:
            yield r
            return
        pivot_pool = p | x
        u = max(_bits(pivot_pool), key=lambda v: (comp[v] & p).bit_count())
        for v in _bits(p & ~comp[u]):
            bit = 1 << v
            yield from bk(r | bit, p & comp[v], x & comp[v])
            p &= ~bit
            x |= bit

    for r in bk(0, full, 0):
        yield tuple(_bits(r))


def _trim_to_exact(
    sets: list[tuple[int, ...]], weights: list[Fraction], n: int
) -> list[tuple[tuple[int, ...], Fraction]]:
    # Split (S, x) into (S, x - r) and (S \ {v}, r) until every vertex has
    # coverage exactly 1; total weight is unchanged.
    pool: dict[tuple[int, ...], Fraction] = {}
    for s, w in zip(sets, weights):
        if w > 0:
            pool[s] = pool.get(s, Fraction(0)) + w
    for v in range(n):
        excess = sum((w for s, w in pool.items() if v in s), Fraction(0)) - 1
        if excess < 0:
            raise AssertionError(f"LP certificate leaves vertex {v} uncovered")
        # Prefer shrinking large sets so no set ever becomes empty.
        for s in sorted((s for s in pool if v in s), key=len, reverse=True):
            if excess == 0:
                break
            if len(s) == 1:
                raise AssertionError("LP certificate is not optimal")
            r = min(excess, pool[s])
            pool[s] -= r
            if pool[s] == 0:
                del pool[s]
            smaller = tuple(u for u in s if u != v)
            pool[smaller] = pool.get(smaller, Fraction(0)) + r
            excess -= r
    return sorted(pool.items())


def fractional_chromatic_exact(graph: DependencyGraph) -> tuple[Fraction, FractionalCover]:
    """Exact fractional chromatic number with a certificate cover.

    Solves ``max sum_v y_v  s.t.  sum_{v in S} y_v <= 1`` over all maximal
    independent sets ``S``; the optimal duals are the set weights of an
    optimal covering, which is then trimmed to an exact cover.
    """
    n = graph.vertex_count
    if n > EXACT_CHI_MAX_VERTICES:
        raise TooLarge(n)
    mis = list(maximal_independent_sets(graph))
    A = []
    for s in mis:
        row = [0] * n
        for v in s:
            row[v] = 1
        A.append(row)
    sol = solve_packing_lp(A, [1] * len(mis), [1] * n)
    elements = _trim_to_exact(mis, sol.dual, n)
    cover = FractionalCover(tuple(elements), n)
    if cover.weight != sol.value:
        raise AssertionError("certificate weight differs from LP optimum")
    return sol.value, cover


def greedy_chromatic_upper(graph: DependencyGraph) -> int:
    """Colours used by a largest-degree-first sequential colouring.

    Degree ties are broken by saturation (number of distinct colours already
    on the neighbourhood), then by index.
    """
    n = graph.vertex_count
    colour = [-1] * n
    seen: list[set[int]] = [set() for _ in range(n)]
    uncoloured = set(range(n))
    while uncoloured:
        v = max(uncoloured, key=lambda u: (graph.degree(u), len(seen[u]), -u))
        c = 0
        while c in seen[v]:
            c += 1
        colour[v] = c
        uncoloured.discard(v)
        for u in graph.neighbors(v):
            seen[u].add(c)
    return max(colour) + 1


def induced_subgraph(graph: DependencyGraph, keep: Sequence[int]) -> DependencyGraph:
    """Subgraph induced by ``keep``, reindexed in the given order."""
    keep = list(keep)
    if len(set(keep)) != len(keep):
        raise ValueError("induced_subgraph indices must be distinct")
    for v in keep:
        if not 0 <= v < graph.vertex_count:
            raise IndexError(f"vertex {v} out of range for {graph.vertex_count} vertices")
    index = {v: k for k, v in enumerate(keep)}
    edges = [(index[i], index[j]) for i, j in graph.edges if i in index and j in index]
    return DependencyGraph.from_edges(len(keep), edges)


def chi_estimates(graph: DependencyGraph, exact: bool = True) -> ChiEstimates:
    """The chain clique <= chi* <= greedy colours <= max degree + 1."""
    clique = clique_number(graph)
    chi_star = None
    if exact and graph.vertex_count <= EXACT_CHI_MAX_VERTICES:
        chi_star, _ = fractional_chromatic_exact(graph)
    return ChiEstimates(
        clique_lower=clique.size,
        chi_star=chi_star,
        chi_upper=greedy_chromatic_upper(graph),
        delta_plus_one=graph.max_degree() + 1,
        clique_exact=clique.exact,
    )


# Graph text format: "m <n>" then "e i j" per edge; '#' starts a comment line.

def parse_graph(text: str) -> DependencyGraph:
    m = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        try:
            if tok[0] == "m" and len(tok) == 2 and m is None:
                m = int(tok[1])
            elif tok[0] == "e" and len(tok) == 3:
                edges.append((int(tok[1]), int(tok[2])))
            else:
                raise ValueError(f"unexpected record {line!r}")
        except ValueError as exc:
            raise ValueError(f"graph line {lineno}: {exc}") from None
    if m is None:
        raise ValueError("graph file has no 'm <vertex_count>' line")
    return DependencyGraph.from_edges(m, edges)


def format_graph(graph: DependencyGraph) -> str:
    lines = [f"m {graph.vertex_count}"]
    lines += [f"e {i} {j}" for i, j in graph.edges]
    return "\n".join(lines) + "\n"


def read_graph(path: str | Path) -> DependencyGraph:
    return parse_graph(Path(path).read_text())


def write_graph(graph: DependencyGraph, path: str | Path) -> None:
    Path(path).write_text(format_graph(graph))
