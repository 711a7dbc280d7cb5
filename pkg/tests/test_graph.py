import math

import numpy as np
import pytest
from scipy import stats

from infector.config import Duration, MarkovSEIR, ModelConfig, PopulationSpec
from infector.graph import (
    FIG1_LABELS,
    build_graph,
    degree_stats,
    dump_graph,
    fixture_graph_fig1,
    load_graph,
)
from infector.rng import stream

from conftest import extremal_config, marked_config, single_type_config, symmetric_marked_config


def test_zero_rate_graph_is_empty():
    g = build_graph(single_type_config(n=50, rate=0.0))
    assert g.num_edges == 0


def test_determinism_same_seed():
    cfg = symmetric_marked_config(n=500, seed=11)
    g1, g2 = build_graph(cfg), build_graph(cfg)
    assert np.array_equal(g1.indptr, g2.indptr)
    assert np.array_equal(g1.heads, g2.heads)
    assert np.array_equal(g1.weights, g2.weights)


def test_different_seed_differs():
    a = build_graph(symmetric_marked_config(n=500, seed=1))
    b = build_graph(symmetric_marked_config(n=500, seed=2))
    assert not (a.num_edges == b.num_edges and np.array_equal(a.weights, b.weights))


def test_mean_out_degree():
    cfg = symmetric_marked_config(n=10_000, m_tilde=2.0, seed=3)
    g = build_graph(cfg)
    deg = np.diff(g.indptr)
    se = deg.std(ddof=1) / math.sqrt(len(deg))
    assert abs(deg.mean() - 2.0) < 3 * se


def test_heads_distinct_within_type_and_in_range():
    cfg = marked_config(400, 0.3, 3.0, 2.0, seed=5)
    g = build_graph(cfg)
    pop = g.population
    for u in range(g.n):
        heads, _ = g.out_edges(u)
        types = pop.type_of(heads)
        for j0 in range(pop.k):
            hj = heads[types == j0]
            assert len(set(hj.tolist())) == len(hj)
            lo, hi = pop.boundaries[j0], pop.boundaries[j0 + 1]
            assert ((hj >= lo) & (hj < hi)).all()


def test_no_duplicate_out_weights():
    g = build_graph(symmetric_marked_config(n=2000, seed=8))
    for u in range(g.n):
        _, w = g.out_edges(u)
        assert len(np.unique(w)) == len(w)


def test_reverse_csr_oracle():
    g = build_graph(symmetric_marked_config(n=300, seed=4))
    r_indptr, r_tails, r_weights = g.reverse_csr()
    fwd = set()
    tails, heads, weights = g.edge_list()
    for t, h, w in zip(tails, heads, weights):
        fwd.add((int(t), int(h), float(w)))
    rev = set()
    for v in range(g.n):
        for e in range(r_indptr[v], r_indptr[v + 1]):
            rev.add((int(r_tails[e]), v, float(r_weights[e])))
    assert fwd == rev


# --------------------------------------------------------------------------
# worked-example fixture
# --------------------------------------------------------------------------

def test_fixture_distance_a_to_d():
    g = fixture_graph_fig1()
    from infector._kernels import dijkstra

    dist, _ = dijkstra(g.indptr, g.heads, g.weights, np.array([FIG1_LABELS["a"]]))
    assert dist[FIG1_LABELS["d"]] == pytest.approx(1.8, abs=0.0)


def test_fixture_types():
    g = fixture_graph_fig1()
    pop = g.population
    for name in "acdg":
        assert pop.type_of(FIG1_LABELS[name]) == 0
    for name in "befh":
        assert pop.type_of(FIG1_LABELS[name]) == 1


def test_degree_stats_conservation():
    g = build_graph(marked_config(600, 0.3, 3.0, 2.0, seed=6))
    hist = degree_stats(g)
    for (i, _), h in hist.items():
        assert h.sum() == g.population.counts[i - 1]


def test_degree_stats_fixture_edge_count():
    g = fixture_graph_fig1()
    hist = degree_stats(g)
    total = sum(int((np.arange(len(h)) * h).sum()) for h in hist.values())
    assert total == g.num_edges


def test_degree_histogram_binomial_fit():
    # type-1 -> type-1 out-degree is Poisson(m_tilde * iota) mixed over iota;
    # for exp(1) durations this is geometric-like, so test the marked
    # thinning instead with a constant infectious period: degree is then
    # exactly Poisson(p1 * m_tilde), compared by chi-square
    n = 10_000
    pop = PopulationSpec(n=n, counts=[n // 2, n // 2], proportions=[0.5, 0.5])
    from infector.config import MarkedSingleProcess

    kern = MarkedSingleProcess(
        latent=[Duration.constant(0.0)] * 2,
        infectious=[Duration.constant(1.0)] * 2,
        total_rates=[2.0, 2.0],
    )
    cfg = ModelConfig(population=pop, kernel=kern, initial_infecteds=(0,), seed=13)
    g = build_graph(cfg)
    hist = degree_stats(g)[(1, 1)]
    kmax = len(hist)
    expected = stats.poisson.pmf(np.arange(kmax), 1.0) * hist.sum()
    # merge sparse tail bins
    keep = expected >= 5
    obs = np.append(hist[keep], hist[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    exp = exp * obs.sum() / exp.sum()
    chi2 = ((obs - exp) ** 2 / exp).sum()
    crit = stats.chi2.ppf(0.99, len(obs) - 1)
    assert chi2 < crit


# --------------------------------------------------------------------------
# extremal weights
# --------------------------------------------------------------------------

def test_extremal_weight_bands():
    cfg = extremal_config(n=1000, fast_pair=(1, 1), seed=21)
    g = build_graph(cfg)
    n = g.n
    pop = g.population
    tails, heads, weights = g.edge_list()
    fast = (pop.type_of(tails) == 0) & (pop.type_of(heads) == 0)
    assert (weights[fast] < n**-2.0).all()
    assert (weights[~fast] > n**-1.0).all()
    assert (weights[~fast] < n**-1.0 + n**-2.0).all()


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def test_dump_load_round_trip(tmp_path):
    g = build_graph(marked_config(300, 0.3, 3.0, 2.0, seed=9))
    path = tmp_path / "g.txt"
    dump_graph(g, path)
    g2 = load_graph(path)
    assert g2.n == g.n
    assert np.array_equal(g2.indptr, g.indptr)
    assert np.array_equal(g2.heads, g.heads)
    assert np.array_equal(g2.weights, g.weights)
    assert g2.realized_seed == g.realized_seed
    # byte-identical second dump
    path2 = tmp_path / "g2.txt"
    dump_graph(g2, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_build_with_explicit_rng_matches_stream():
    cfg = symmetric_marked_config(n=400, seed=17)
    g1 = build_graph(cfg)
    g2 = build_graph(cfg, stream(17, "graph"))
    assert np.array_equal(g1.weights, g2.weights)
