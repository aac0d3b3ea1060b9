import itertools
import math

import numpy as np
import pytest
from scipy.stats import norm, rankdata

from chromatic_pb.covers import BipartiteRankingShape, bipartite_ranking_cover, bipartite_ranking_graph
from chromatic_pb.depgraph import DependencyGraph, FractionalCover
from chromatic_pb.gibbs import (
    GaussianLinearPosterior,
    LabeledDataset,
    LinearScorer,
    PairSet,
    bipartite_gaussian_generator,
    bipartite_gaussian_gibbs_risk,
    empirical_auc_risk,
    empirical_ranking_risk,
    gibbs_error_auc,
    gibbs_error_binary,
    mc_gibbs_error,
    moment_comparison,
    pair_dataset,
    pointwise_gibbs_loss,
    train_linear,
)


def random_dataset(rng, m=20, d=3):
    X = rng.standard_normal((m, d))
    y = np.where(rng.random(m) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    return LabeledDataset(X, y)


def test_posterior_normalizes_and_kl():
    post = GaussianLinearPosterior([3.0, 4.0], 2.0)
    assert np.allclose(post.direction, [0.6, 0.8])
    assert post.kl == 2.0 and np.allclose(post.mean, [1.2, 1.6])
    assert GaussianLinearPosterior.from_weights([3.0, 4.0]).mu == 5.0
    with pytest.raises(ValueError):
        GaussianLinearPosterior([0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        GaussianLinearPosterior([1.0], 0.0)


def test_single_point_tail_value():
    post = GaussianLinearPosterior([1.0, 0.0], 2.0)
    data = LabeledDataset([[5.0, 0.0]], [1.0])
    # normal tail at 2, from the erfc form
    assert gibbs_error_binary(post, data) == pytest.approx(0.5 * math.erfc(2 / math.sqrt(2)), rel=1e-14)
    assert gibbs_error_binary(post, data) == pytest.approx(0.022750131948179207, rel=1e-13)


def test_small_mu_tends_to_half():
    rng = np.random.default_rng(1)
    data = random_dataset(rng)
    post = GaussianLinearPosterior(rng.standard_normal(3), 1e-9)
    assert gibbs_error_binary(post, data) == pytest.approx(0.5, abs=1e-8)


def test_zero_row_counts_half():
    post = GaussianLinearPosterior([1.0], 3.0)
    assert pointwise_gibbs_loss(post, np.zeros((1, 1)), np.ones(1))[0] == 0.5


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        gibbs_error_binary(GaussianLinearPosterior([1.0, 0.0], 1.0), LabeledDataset([[1.0]], [1.0]))


def test_duplicating_data_leaves_risk_unchanged():
    rng = np.random.default_rng(2)
    data = random_dataset(rng)
    post = GaussianLinearPosterior(rng.standard_normal(3), 1.7)
    assert gibbs_error_binary(post, data.repeat(3)) == pytest.approx(gibbs_error_binary(post, data), rel=1e-14)


def test_mc_matches_closed_form_binary():
    rng = np.random.default_rng(3)
    hits = 0
    for k in range(10):
        data = random_dataset(rng)
        post = GaussianLinearPosterior(rng.standard_normal(3), rng.uniform(0.2, 3))
        est = mc_gibbs_error(post, data, 100_000, seed=k)
        hits += abs(est.rate - gibbs_error_binary(post, data)) <= 3 * est.std_error
    assert hits >= 9


def test_mc_matches_closed_form_pairs():
    rng = np.random.default_rng(4)
    data = random_dataset(rng, m=16)
    pairs = PairSet.from_dataset(data)
    post = GaussianLinearPosterior(rng.standard_normal(3), 1.2)
    est = mc_gibbs_error(post, pair_dataset(data, pairs), 100_000, seed=9)
    assert abs(est.rate - gibbs_error_auc(post, data, pairs)) <= 3 * est.std_error


def test_mc_single_point_uses_binomial_error():
    post = GaussianLinearPosterior([1.0], 0.5)
    est = mc_gibbs_error(post, LabeledDataset([[1.0]], [1.0]), 50_000, seed=0)
    assert est.std_error == pytest.approx(math.sqrt(est.rate * (1 - est.rate) / 50_000), rel=1e-3)


def test_mc_is_reproducible_and_worker_invariant():
    rng = np.random.default_rng(5)
    data = random_dataset(rng)
    post = GaussianLinearPosterior(rng.standard_normal(3), 1.0)
    a = mc_gibbs_error(post, data, 20_000, seed=42)
    b = mc_gibbs_error(post, data, 20_000, seed=42, workers=4)
    assert a == b
    assert mc_gibbs_error(post, data, 20_000, seed=43) != a


def test_mc_error_shrinks_like_root_n():
    rng = np.random.default_rng(6)
    data = random_dataset(rng)
    post = GaussianLinearPosterior(rng.standard_normal(3), 1.0)
    small = mc_gibbs_error(post, data, 10_000, seed=1).std_error
    large = mc_gibbs_error(post, data, 160_000, seed=1).std_error
    assert large / small == pytest.approx(0.25, rel=0.1)


# --- empirical risks -----------------------------------------------------------------

def rank_sum_auc(scores, labels):
    r = rankdata(scores)  # average ranks for ties
    pos = labels > 0
    n_pos, n_neg = pos.sum(), (~pos).sum()
    u = r[pos].sum() - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


def test_auc_risk_matches_rank_sum():
    rng = np.random.default_rng(7)
    for _ in range(30):
        data = random_dataset(rng, m=int(rng.integers(4, 30)), d=2)
        # rounding produces ties
        X = np.round(data.features, 1)
        data = LabeledDataset(X, data.labels)
        scorer = LinearScorer(np.array([1.0, 0.0]))
        risk = empirical_auc_risk(scorer, data, PairSet.from_dataset(data))
        assert risk == pytest.approx(1 - rank_sum_auc(scorer.score(X), data.labels), abs=1e-12)


def test_auc_tie_modes():
    data = LabeledDataset([[1.0], [1.0], [0.0], [2.0]], [1.0, -1.0, -1.0, -1.0])
    scorer = LinearScorer([1.0])
    pairs = PairSet.from_dataset(data)
    assert empirical_auc_risk(scorer, data, pairs, "half") == pytest.approx(1.5 / 3)
    assert empirical_auc_risk(scorer, data, pairs, "strict") == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        empirical_auc_risk(scorer, data, pairs, "other")


def test_pairset_checks():
    data = LabeledDataset([[1.0], [0.0]], [1.0, -1.0])
    with pytest.raises(ValueError):
        PairSet([0], [0])
    with pytest.raises(ValueError):
        PairSet([1], [0]).check(data)
    p = PairSet.from_dataset(data)
    assert (p.l_pos, p.l_neg, p.l_min, len(p)) == (1, 1, 1, 1)


def test_pair_dataset_vertex_order():
    data = LabeledDataset([[1.0], [2.0], [10.0], [20.0], [30.0]], [1, 1, -1, -1, -1])
    pairs = PairSet.from_dataset(data)
    diffs = pair_dataset(data, pairs).features[:, 0]
    expect = [data.features[i, 0] - data.features[j, 0] for i, j in itertools.product(pairs.pos, pairs.neg)]
    assert list(diffs) == expect


def test_ranking_risk_antisymmetry():
    rng = np.random.default_rng(8)
    for _ in range(20):
        l = int(rng.integers(2, 12))
        X = np.round(rng.standard_normal((l, 2)), 1)
        Y = rng.permutation(l).astype(float)
        w = np.array([1.0, -0.5])
        h = LinearScorer(w)
        hv = (X[:, None, :] - X[None, :, :]) @ w
        off = ~np.eye(l, dtype=bool)
        tie_mass = np.count_nonzero(hv[off] == 0) / off.sum()
        total = empirical_ranking_risk(h, X, Y) + empirical_ranking_risk(LinearScorer(-w), X, Y)
        assert total == pytest.approx(1 - tie_mass, abs=1e-12)


def test_ranking_risk_brute_force():
    X = np.array([[0.0], [1.0], [3.0]])
    Y = np.array([2.0, 1.0, 0.0])
    h = lambda a, b: (a - b)[:, 0]
    # h increases with x while Y decreases: every ordered pair is wrong
    assert empirical_ranking_risk(h, X, Y) == 1.0
    assert empirical_ranking_risk(h, X, -Y) == 0.0


def test_ranking_population_identity_with_binary_targets():
    # with Y in {0, 1} the ordered-pair risk is 2 p (1 - p) times the AUC risk
    rng = np.random.default_rng(9)
    n, p = 4000, 0.3
    y = (rng.random(n) < p).astype(float)
    X = (y * 1.0 + rng.standard_normal(n))[:, None]
    h = LinearScorer([1.0])
    data = LabeledDataset(X, np.where(y > 0, 1.0, -1.0))
    auc_risk = empirical_auc_risk(h, data, PairSet.from_dataset(data), "strict")
    rank_risk = empirical_ranking_risk(h, X, y)
    p_hat = y.mean()
    assert rank_risk == pytest.approx(2 * p_hat * (1 - p_hat) * auc_risk * n / (n - 1), rel=1e-12)


# --- trainer ----------------------------------------------------------------------------

def separable_blobs(rng, m=100):
    y = np.where(rng.random(m) < 0.5, 1.0, -1.0)
    X = y[:, None] * np.array([2.0, 2.0]) + 0.3 * rng.standard_normal((m, 2))
    return LabeledDataset(X, y)


def test_trainer_separates_blobs():
    data = separable_blobs(np.random.default_rng(10))
    scorer = train_linear(data, 1e-3, epochs=50)
    assert np.all(np.sign(scorer.score(data.features)) == data.labels)


def test_trainer_seed_stability_and_strong_regularization():
    data = separable_blobs(np.random.default_rng(11))
    a = train_linear(data, 0.01, epochs=5, seed=3)
    assert np.array_equal(a.weights, train_linear(data, 0.01, epochs=5, seed=3).weights)
    w = train_linear(data, 1e6, epochs=5).weights
    assert np.linalg.norm(w) <= 1 / math.sqrt(1e6) + 1e-12
    with pytest.raises(ValueError):
        train_linear(data, 0.0)


# --- moments and generators ---------------------------------------------------------------

def test_bipartite_closed_form_matches_mc():
    post = GaussianLinearPosterior([1.0], 2.0)
    gen = bipartite_gaussian_generator(50, 50, 1.0, 0.0)
    rng = np.random.default_rng(12)
    vals = [gibbs_error_binary(post, gen(rng)) for _ in range(400)]
    e = bipartite_gaussian_gibbs_risk(post, 1.0, 0.0)
    p = norm.cdf(1 / math.sqrt(2))
    assert e == pytest.approx(p * norm.sf(2) + (1 - p) * norm.cdf(2), rel=1e-12)
    assert abs(np.mean(vals) - e) < 4 * np.std(vals) / math.sqrt(len(vals))


@pytest.mark.parametrize("r", [1, 2])
def test_moment_comparison_small(r):
    shape = BipartiteRankingShape(4, 4)
    post = GaussianLinearPosterior([1.0], 2.0)
    res = moment_comparison(
        post,
        bipartite_ranking_graph(shape),
        bipartite_ranking_cover(shape),
        bipartite_gaussian_generator(4, 4, 1.0, 0.0),
        r,
        2000,
        seed=r,
        e_true=bipartite_gaussian_gibbs_risk(post, 1.0, 0.0),
    )
    assert res.element_moments.shape == (4,)
    assert np.all(res.holds())


def test_moment_comparison_rejects_unequal_elements():
    g = DependencyGraph(3, ((0, 1),))
    cover = FractionalCover.from_sets([(0, 2), (1,)], 1, 3)
    with pytest.raises(ValueError):
        moment_comparison(GaussianLinearPosterior([1.0], 1.0), g, cover,
                          bipartite_gaussian_generator(1, 3, 1.0, 0.0), 1, 10, 0)
