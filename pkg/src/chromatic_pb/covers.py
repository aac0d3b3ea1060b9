"""Canonical dependency graphs and their fractional covers.

Vertex numbering conventions:

* bipartite ranking: pair (positive ``i``, negative ``j``) is vertex ``i * n_neg + j``;
* ranking U-statistic: ordered pair ``(i, j)``, ``i != j``, numbered row-major
  with the diagonal skipped (see :func:`ranking_pair_index`);
* independent blocks: position ``alpha`` of block ``s`` is vertex ``s * a + alpha``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .depgraph import DependencyGraph, FractionalCover, TooLarge

__all__ = [
    "BipartiteRankingShape",
    "BlockDecomposition",
    "IndivisibleBlocks",
    "iid_cover",
    "bipartite_ranking_graph",
    "bipartite_ranking_cover",
    "ustat_ranking_chi_bound",
    "ustat_ranking_cover",
    "ranking_dependency_graph",
    "ranking_pair_index",
    "beta_block_decomposition",
]

MAX_PAIR_VERTICES = 10_000_000
USTAT_COVER_MAX_L = 7


class IndivisibleBlocks(ValueError):
    def __init__(self, m: int, a: int):
        super().__init__(f"block length {a} does not divide {m} // 2 into whole blocks")
        self.m = m
        self.a = a


@dataclass(frozen=True)
class BipartiteRankingShape:
    pos_count: int
    neg_count: int

    def __post_init__(self) -> None:
        if self.pos_count < 1 or self.neg_count < 1:
            raise ValueError(
                f"both classes must be nonempty, got {self.pos_count}/{self.neg_count}"
            )

    @property
    def m(self) -> int:
        return self.pos_count * self.neg_count

    @property
    def l_max(self) -> int:
        return max(self.pos_count, self.neg_count)

    @property
    def l_min(self) -> int:
        return min(self.pos_count, self.neg_count)

    def vertex(self, i: int, j: int) -> int:
        return i * self.neg_count + j

    def pair(self, v: int) -> tuple[int, int]:
        return divmod(v, self.neg_count)


@dataclass(frozen=True)
class BlockDecomposition:
    m: int
    block_length: int
    block_count: int
    z0_blocks: tuple[tuple[int, ...], ...]
    z1_blocks: tuple[tuple[int, ...], ...]
    dropped_last: bool
    surrogate_graph: DependencyGraph
    surrogate_cover: FractionalCover


def iid_cover(m: int) -> tuple[DependencyGraph, FractionalCover]:
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    return DependencyGraph(m), FractionalCover(((tuple(range(m)), 1),), m)


def bipartite_ranking_graph(shape: BipartiteRankingShape) -> DependencyGraph:
    """Pairs sharing their positive or their negative example are dependent."""
    if shape.m > MAX_PAIR_VERTICES:
        raise OverflowError(f"{shape.m} pair vertices exceeds {MAX_PAIR_VERTICES}")
    P, N = shape.pos_count, shape.neg_count
    edges = []
    for i in range(P):
        for j in range(N):
            v = i * N + j
            edges.extend((v, i * N + q) for q in range(j + 1, N))
            edges.extend((v, p * N + j) for p in range(i + 1, P))
    return DependencyGraph(shape.m, tuple(edges))


def bipartite_ranking_cover(shape: BipartiteRankingShape) -> FractionalCover:
    """``l_max`` unit-weight sets, each pairing every example of the smaller
    class with a distinct, cyclically shifted example of the larger one."""
    P, N = shape.pos_count, shape.neg_count
    sets = []
    if P >= N:
        for k in range(P):
            sets.append(tuple(shape.vertex((j + k) % P, j) for j in range(N)))
    else:
        for k in range(N):
            sets.append(tuple(shape.vertex(i, (i + k) % N) for i in range(P)))
    return FractionalCover.from_sets(sets, 1, shape.m)


def ustat_ranking_chi_bound(l: int) -> Fraction:
    """Weight ``l (l - 1) / floor(l / 2)`` of the permutation cover."""
    if l < 2:
        raise ValueError(f"l must be at least 2, got {l}")
    return Fraction(l * (l - 1), l // 2)


def ranking_pair_index(l: int, i: int, j: int) -> int:
    if i == j:
        raise ValueError("ranking pairs need distinct indices")
    return i * (l - 1) + (j if j < i else j - 1)


def ranking_dependency_graph(l: int) -> DependencyGraph:
    """Ordered pairs ``(i, j)`` of ``l`` examples; dependent when they share an example."""
    if l < 2:
        raise ValueError(f"l must be at least 2, got {l}")
    pairs = [(i, j) for i in range(l) for j in range(l) if i != j]
    edges = [
        (u, v)
        for u, (a, b) in enumerate(pairs)
        for v in range(u + 1, len(pairs))
        if {a, b} & set(pairs[v])
    ]
    return DependencyGraph(len(pairs), tuple(edges))


def ustat_ranking_cover(l: int) -> FractionalCover:
    """One set per permutation ``s`` of the examples: the pairs
    ``(s[i], s[h + i])`` for ``i < h = floor(l / 2)``, each weighted
    ``1 / ((l - 2)! h)``."""
    if l < 2:
        raise ValueError(f"l must be at least 2, got {l}")
    if l > USTAT_COVER_MAX_L:
        raise TooLarge(l, USTAT_COVER_MAX_L)
    h = l // 2
    w = Fraction(1, math.factorial(l - 2) * h)
    sets = [
        tuple(ranking_pair_index(l, s[i], s[h + i]) for i in range(h))
        for s in itertools.permutations(range(l))
    ]
    return FractionalCover.from_sets(sets, w, l * (l - 1))


def beta_block_decomposition(m: int, a: int) -> BlockDecomposition:
    """Split ``0..m-1`` into alternating blocks of length ``a``.

    An odd ``m`` loses its last index first.  Even-numbered blocks form Z0,
    odd-numbered ones Z1.  The surrogate is ``mu`` independent copies of a
    length-``a`` block: each block is a clique and ``C_alpha`` collects
    position ``alpha`` of every block.
    """
    if m < 2 or a < 1:
        raise IndivisibleBlocks(m, a)
    dropped = m % 2 == 1
    m_eff = m - 1 if dropped else m
    half = m_eff // 2
    if half % a:
        raise IndivisibleBlocks(m, a)
    mu = half // a
    z0 = tuple(tuple(range(2 * s * a, 2 * s * a + a)) for s in range(mu))
    z1 = tuple(tuple(range((2 * s + 1) * a, (2 * s + 2) * a)) for s in range(mu))
    edges = [
        (s * a + p, s * a + q) for s in range(mu) for p in range(a) for q in range(p + 1, a)
    ]
    graph = DependencyGraph(mu * a, tuple(edges))
    cover = FractionalCover.from_sets(
        [tuple(s * a + alpha for s in range(mu)) for alpha in range(a)], 1, mu * a
    )
    return BlockDecomposition(
        m=m_eff,
        block_length=a,
        block_count=mu,
        z0_blocks=z0,
        z1_blocks=z1,
        dropped_last=dropped,
        surrogate_graph=graph,
        surrogate_cover=cover,
    )
