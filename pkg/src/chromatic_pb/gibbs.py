"""Gibbs risks of Gaussian posteriors over linear scorers.

The posterior ``Q_{w,mu}`` is ``N(mu * w, I)`` for a unit direction ``w``; the
prior is ``N(0, I)`` so ``KL(Q || P) = mu^2 / 2``.  For a draw ``v ~ Q`` the
score ``v . x`` is ``N(mu w . x, |x|^2)``, hence a point ``(x, y)`` is
misclassified with probability ``Phi_bar(mu y w . x / |x|)``.  Pairwise
(AUC) risks apply the same formula to the differences ``x_i - x_j``.

Monte-Carlo estimates are split into fixed-size blocks; block ``b`` draws
from ``default_rng([seed, b])``, so the result does not depend on how many
workers process the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

from .depgraph import DependencyGraph, FractionalCover, validate_cover

__all__ = [
    "LinearScorer",
    "GaussianLinearPosterior",
    "LabeledDataset",
    "PairSet",
    "MCEstimate",
    "MomentComparison",
    "gibbs_error_binary",
    "gibbs_error_auc",
    "pointwise_gibbs_loss",
    "pair_dataset",
    "mc_gibbs_error",
    "empirical_auc_risk",
    "empirical_ranking_risk",
    "train_linear",
    "moment_comparison",
    "bipartite_gaussian_generator",
    "bipartite_gaussian_gibbs_risk",
]

MC_BLOCK = 4096


@dataclass(frozen=True)
class LinearScorer:
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size < 1 or not np.all(np.isfinite(w)):
            raise ValueError("scorer weights must be a finite nonempty vector")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.size

    def score(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights

    def pairwise(self, x: np.ndarray, x_other: np.ndarray) -> np.ndarray:
        """``h(x, x') = w . (x - x')``."""
        return (np.asarray(x, dtype=float) - np.asarray(x_other, dtype=float)) @ self.weights


@dataclass(frozen=True)
class GaussianLinearPosterior:
    direction: np.ndarray
    mu: float

    def __post_init__(self) -> None:
        w = np.asarray(self.direction, dtype=float).ravel()
        norm = np.linalg.norm(w)
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("posterior direction must be a finite nonzero vector")
        if abs(norm - 1.0) > 1e-12:
            w = w / norm
        if not self.mu > 0:
            raise ValueError(f"posterior scale mu={self.mu} must be positive")
        object.__setattr__(self, "direction", w)
        object.__setattr__(self, "mu", float(self.mu))

    @classmethod
    def from_weights(cls, w, mu: float | None = None) -> GaussianLinearPosterior:
        """Normalize ``w``; ``mu`` defaults to ``|w|``."""
        w = np.asarray(w, dtype=float).ravel()
        return cls(w, float(np.linalg.norm(w)) if mu is None else mu)

    @property
    def dim(self) -> int:
        return self.direction.size

    @property
    def kl(self) -> float:
        return 0.5 * self.mu**2

    @property
    def mean(self) -> np.ndarray:
        return self.mu * self.direction


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.labels, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ValueError(f"features {X.shape} do not match {y.size} labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite values")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def m(self) -> int:
        return self.labels.size

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_pos(self) -> int:
        return int(np.sum(self.labels > 0))

    @property
    def n_neg(self) -> int:
        return int(np.sum(self.labels < 0))

    def subset(self, idx) -> LabeledDataset:
        return LabeledDataset(self.features[idx], self.labels[idx])

    def repeat(self, k: int) -> LabeledDataset:
        return LabeledDataset(np.tile(self.features, (k, 1)), np.tile(self.labels, k))


@dataclass(frozen=True)
class PairSet:
    """Positive and negative row indices; pair ``(pos[i], neg[j])`` is
    vertex ``i * len(neg) + j``."""

    pos: np.ndarray
    neg: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.pos, dtype=np.intp).ravel()
        n = np.asarray(self.neg, dtype=np.intp).ravel()
        if np.intersect1d(p, n).size:
            raise ValueError("positive and negative index lists overlap")
        object.__setattr__(self, "pos", p)
        object.__setattr__(self, "neg", n)

    @classmethod
    def from_dataset(cls, data: LabeledDataset) -> PairSet:
        return cls(np.flatnonzero(data.labels > 0), np.flatnonzero(data.labels < 0))

    @property
    def l_pos(self) -> int:
        return self.pos.size

    @property
    def l_neg(self) -> int:
        return self.neg.size

    @property
    def l_min(self) -> int:
        return min(self.l_pos, self.l_neg)

    def __len__(self) -> int:
        return self.l_pos * self.l_neg

    def check(self, data: LabeledDataset) -> None:
        if self.l_pos == 0 or self.l_neg == 0:
            raise ValueError("pair set needs both classes to be nonempty")
        if np.any(data.labels[self.pos] < 0) or np.any(data.labels[self.neg] > 0):
            raise ValueError("pair set disagrees with dataset labels")


def _check_dim(post: GaussianLinearPosterior, data: LabeledDataset) -> None:
    if post.dim != data.dim:
        raise ValueError(f"posterior has dimension {post.dim}, data has {data.dim}")


def pointwise_gibbs_loss(post: GaussianLinearPosterior, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-row misclassification probability under ``post``; zero rows give 1/2."""
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=1)
    margin = y * (X @ post.direction)
    z = np.divide(post.mu * margin, norms, out=np.zeros_like(margin), where=norms > 0)
    return ndtr(-z)


def gibbs_error_binary(post: GaussianLinearPosterior, data: LabeledDataset) -> float:
    _check_dim(post, data)
    return float(pointwise_gibbs_loss(post, data.features, data.labels).mean())


def pair_dataset(data: LabeledDataset, pairs: PairSet) -> LabeledDataset:
    """Differences ``x_pos - x_neg`` in vertex order, all labelled +1."""
    pairs.check(data)
    X = data.features
    diff = (X[pairs.pos][:, None, :] - X[pairs.neg][None, :, :]).reshape(-1, X.shape[1])
    return LabeledDataset(diff, np.ones(diff.shape[0]))


def gibbs_error_auc(post: GaussianLinearPosterior, data: LabeledDataset, pairs: PairSet) -> float:
    _check_dim(post, data)
    pairs.check(data)
    return gibbs_error_binary(post, pair_dataset(data, pairs))


@dataclass(frozen=True)
class MCEstimate:
    rate: float
    std_error: float
    n_samples: int

    def __iter__(self):
        return iter((self.rate, self.std_error))


def _mc_block(post, X, y, seed, block, size):
    rng = np.random.default_rng([seed, block])
    V = post.mean + rng.standard_normal((size, post.dim))
    s = (V @ X.T) * y
    per_draw = ((s < 0).sum(axis=1) + 0.5 * (s == 0).sum(axis=1)) / X.shape[0]
    return size, float(per_draw.sum()), float((per_draw**2).sum())


def mc_gibbs_error(
    post: GaussianLinearPosterior,
    data: LabeledDataset,
    n_samples: int,
    seed: int,
    *,
    workers: int | None = None,
    block_size: int = MC_BLOCK,
) -> MCEstimate:
    """Monte-Carlo Gibbs error: draw ``v ~ Q`` and average the 0-1 loss of
    ``sign(v . x)`` over the data (exact score ties count 1/2).

    The standard error is that of the mean of the per-draw error rates; for a
    single data point this is the binomial standard error.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    _check_dim(post, data)
    X, y = data.features, data.labels
    sizes = [min(block_size, n_samples - s) for s in range(0, n_samples, block_size)]
    jobs = [(post, X, y, seed, b, size) for b, size in enumerate(sizes)]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _mc_block(*a), jobs))
    else:
        parts = [_mc_block(*a) for a in jobs]
    n = sum(p[0] for p in parts)
    total = math.fsum(p[1] for p in parts)
    total_sq = math.fsum(p[2] for p in parts)
    rate = total / n
    if n > 1:
        var = max(total_sq - n * rate * rate, 0.0) / (n - 1)
    else:
        var = rate * (1.0 - rate)
    return MCEstimate(rate, math.sqrt(var / n), n)


def empirical_auc_risk(
    scorer: LinearScorer, data: LabeledDataset, pairs: PairSet, tie_mode: str = "half"
) -> float:
    """Fraction of (positive, negative) pairs ranked the wrong way round.

    ``tie_mode="half"`` counts equal scores as 1/2 (so the result is 1 - AUC);
    ``"strict"`` counts them as 0, the literal indicator ``f(x+) < f(x-)``.
    """
    if tie_mode not in ("half", "strict"):
        raise ValueError(f"unknown tie mode {tie_mode!r}")
    pairs.check(data)
    f = scorer.score(data.features)
    d = f[pairs.pos][:, None] - f[pairs.neg][None, :]
    wrong = np.count_nonzero(d < 0)
    if tie_mode == "half":
        wrong = wrong + 0.5 * np.count_nonzero(d == 0)
    return float(wrong / d.size)


def empirical_ranking_risk(
    h: Callable[[np.ndarray, np.ndarray], np.ndarray] | LinearScorer,
    X: np.ndarray,
    scores: Sequence[float],
) -> float:
    """Average of ``1[(Y_i - Y_j) h(X_i, X_j) < 0]`` over ordered pairs ``i != j``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    Y = np.asarray(scores, dtype=float).ravel()
    l = Y.size
    if l < 2 or X.shape[0] != l:
        raise ValueError("need at least two examples with matching scores")
    pairwise = h.pairwise if isinstance(h, LinearScorer) else h
    i, j = np.nonzero(~np.eye(l, dtype=bool))
    hv = np.asarray(pairwise(X[i], X[j]), dtype=float)
    return float(np.count_nonzero((Y[i] - Y[j]) * hv < 0) / i.size)


def train_linear(data: LabeledDataset, lam: float, epochs: int = 50, seed: int = 0) -> LinearScorer:
    """Pegasos hinge-loss SGD without bias; returns the averaged iterate."""
    if not lam > 0:
        raise ValueError(f"regularization {lam} must be positive")
    if data.m < 1 or epochs < 1:
        raise ValueError("need at least one example and one epoch")
    rng = np.random.default_rng(seed)
    X, y = data.features, data.labels
    w = np.zeros(data.dim)
    w_sum = np.zeros(data.dim)
    radius = 1.0 / math.sqrt(lam)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(data.m):
            t += 1
            eta = 1.0 / (lam * t)
            violated = y[i] * (X[i] @ w) < 1.0
            w *= 1.0 - eta * lam
            if violated:
                w += eta * y[i] * X[i]
            norm = np.linalg.norm(w)
            if norm > radius:
                w *= radius / norm
            w_sum += w
    return LinearScorer(w_sum / t)


@dataclass(frozen=True)
class MomentComparison:
    order: int
    full_moment: float
    full_se: float
    element_moments: np.ndarray
    element_se: np.ndarray
    e_true: float
    n_draws: int

    def holds(self, n_se: float = 3.0) -> np.ndarray:
        """Per element: full moment <= element moment + ``n_se`` standard errors."""
        return self.full_moment <= self.element_moments + n_se * self.element_se


def moment_comparison(
    post: GaussianLinearPosterior,
    graph: DependencyGraph,
    cover: FractionalCover,
    generator: Callable[[np.random.Generator], LabeledDataset],
    r: int,
    n_draws: int,
    seed: int,
    e_true: float | None = None,
) -> MomentComparison:
    """Monte-Carlo estimates of ``E|e_hat(Z) - e|^r`` on the full sample and
    on each cover element ``Z^(j)``.

    ``generator(rng)`` returns one dependent sample with one row per graph
    vertex.  Without ``e_true`` the grand mean of the full-sample Gibbs error
    is used as the true risk.
    """
    if r < 1:
        raise ValueError("moment order must be at least 1")
    validate_cover(graph, cover)
    sizes = {len(s) for s in cover.sets}
    if len(sizes) != 1:
        raise ValueError(f"cover elements have unequal sizes {sorted(sizes)}")
    rng = np.random.default_rng(seed)
    n = graph.vertex_count
    member = np.zeros((len(cover), n))
    for j, s in enumerate(cover.sets):
        member[j, list(s)] = 1.0 / len(s)
    full = np.empty(n_draws)
    parts = np.empty((n_draws, len(cover)))
    for d in range(n_draws):
        sample = generator(rng)
        if sample.m != n:
            raise ValueError(f"generator produced {sample.m} rows for {n} vertices")
        loss = pointwise_gibbs_loss(post, sample.features, sample.labels)
        full[d] = loss.mean()
        parts[d] = member @ loss
    e = float(full.mean()) if e_true is None else e_true
    dev_full = np.abs(full - e) ** r
    dev_parts = np.abs(parts - e) ** r
    root_n = math.sqrt(n_draws)
    return MomentComparison(
        order=r,
        full_moment=float(dev_full.mean()),
        full_se=float(dev_full.std(ddof=1) / root_n),
        element_moments=dev_parts.mean(axis=0),
        element_se=dev_parts.std(axis=0, ddof=1) / root_n,
        e_true=e,
        n_draws=n_draws,
    )


def bipartite_gaussian_generator(
    l_pos: int,
    l_neg: int,
    mean_pos,
    mean_neg,
    sigma: float = 1.0,
) -> Callable[[np.random.Generator], LabeledDataset]:
    """Sampler of pair-difference datasets for two Gaussian classes.

    Each call draws ``l_pos`` positives and ``l_neg`` negatives and returns
    the ``l_pos * l_neg`` differences in vertex order, labelled +1.
    """
    mp = np.atleast_1d(np.asarray(mean_pos, dtype=float))
    mn = np.atleast_1d(np.asarray(mean_neg, dtype=float))

    def draw(rng: np.random.Generator) -> LabeledDataset:
        xp = mp + sigma * rng.standard_normal((l_pos, mp.size))
        xn = mn + sigma * rng.standard_normal((l_neg, mn.size))
        diff = (xp[:, None, :] - xn[None, :, :]).reshape(-1, mp.size)
        return LabeledDataset(diff, np.ones(diff.shape[0]))

    return draw


def bipartite_gaussian_gibbs_risk(post: GaussianLinearPosterior, mean_pos, mean_neg, sigma=1.0) -> float:
    """Population Gibbs AUC risk for one-dimensional Gaussian classes.

    In one dimension ``w . d / |d| = sign(d)``, so a pair costs
    ``Phi_bar(mu)`` when ``d > 0`` and ``Phi(mu)`` otherwise, with
    ``d ~ N(mean_pos - mean_neg, 2 sigma^2)``.
    """
    if post.dim != 1:
        raise ValueError("closed form only for one-dimensional posteriors")
    sign = post.direction[0]
    p_pos = float(ndtr(sign * (float(mean_pos) - float(mean_neg)) / (sigma * math.sqrt(2.0))))
    tail = float(ndtr(-post.mu))
    return p_pos * tail + (1.0 - p_pos) * (1.0 - tail)
