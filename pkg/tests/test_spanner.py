import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmetric.bounds import BoundMatrix
from fmetric.metric import DistanceOracle, PointSet, generate_pointset
from fmetric.spanner import (
    BLIND_STRATEGIES,
    FULL_SWEEP_STRATEGIES,
    Spanner,
    Strategy,
    build_blind_spanner,
    build_greedy_spanner,
    make_selector,
    select_next_pair,
    shortest_paths,
    stretch_ok,
    verify_stretch,
)

from conftest import brute_distances, dijkstra_all

ALL = BLIND_STRATEGIES + FULL_SWEEP_STRATEGIES + ("greedy",)


def _build(ps, eps, name, seed=0, backend=None):
    o = DistanceOracle(ps, approx_seed=seed)
    if name == "greedy":
        return build_greedy_spanner(o, eps, backend=backend), o
    return build_blind_spanner(o, eps, name, seed, backend=backend), o


def test_strategy_parsing():
    s = Strategy.parse("blind_random_connect_first_lower_bound_first")
    assert s.kind == "blind_random" and s.connect_first and s.lower_bound_first
    assert s.name == "blind_random_connect_first_lower_bound_first"
    assert Strategy.parse("greedy").kind == "greedy_baseline"
    assert Strategy.parse("quasi_sorted_shaker").needs_approx
    for bad in ["blind_magic", "blind_random_sideways"]:
        with pytest.raises(ValueError):
            Strategy.parse(bad)
    with pytest.raises(ValueError):
        Strategy("blind_greedy", connect_first=True)
    f = Strategy.parse("quasi_sorted_shaker_full_sweep")
    assert f.kind == "quasi_sorted_shaker" and f.full_sweep and f.name == "quasi_sorted_shaker_full_sweep"
    with pytest.raises(ValueError):
        Strategy.parse("blind_greedy_full_sweep")


@pytest.mark.parametrize("name", ALL)
def test_two_points_one_edge(name):
    ps = PointSet(np.array([[0.0, 0.0], [1.0, 2.0]]))
    sp, o = _build(ps, 0.3, name)
    assert sp.n_edges == 1 and sp.queries_used == 1
    assert sp.edges[0][2] == math.sqrt(5.0)


@pytest.mark.parametrize("name", ALL)
def test_single_point(name):
    sp, _ = _build(PointSet(np.array([[1.0]])), 0.1, name)
    assert sp.n_edges == 0 and sp.queries_used == 0


def test_three_points_need_all_edges():
    # With two edges of lengths x <= y revealed, the third pair has bounds
    # [y - x, x + y].  Here the lengths are 1, 1.0296.., 1.0296.., so the
    # ratio is at least (1 + 1.0296) / 0.0296 > 11 or infinite (a = 0): the
    # third pair is always queried, whatever the tie-breaking.
    ps = PointSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.9]]))
    d = brute_distances(ps.points)
    x, y = sorted([d[0, 1], d[0, 2]])[:2]
    assert (x + y) / (y - x) > 11
    for seed in range(10):
        sp, _ = _build(ps, 10.0, "blind_greedy", seed)
        assert sp.n_edges == 3


def test_greedy_collinear():
    ps = PointSet(np.array([[0.0], [1.0], [2.0]]))
    sp, o = _build(ps, 0.1, "greedy")
    assert sorted((i, j) for i, j, _ in sp.edges) == [(0, 1), (1, 2)]
    assert sp.queries_used == 3 == o.exact_query_count


def test_greedy_ties_lexicographic():
    # unit square: four sides tie at 1, diagonals tie at sqrt 2
    ps = PointSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    sp, _ = _build(ps, 0.5, "greedy")
    assert [(i, j) for i, j, _ in sp.edges] == [(0, 1), (0, 2), (1, 3), (2, 3)]


def _greedy_reference(ps, eps):
    """Textbook greedy spanner with Dijkstra on the partial graph."""
    d = brute_distances(ps.points)
    n = ps.n
    pairs = sorted(itertools.combinations(range(n), 2), key=lambda p: (d[p], p))
    edges = []
    for i, j in pairs:
        if dijkstra_all(n, edges)[i, j] > (1 + eps) * d[i, j]:
            edges.append((i, j, d[i, j]))
    return [(i, j) for i, j, _ in edges]


@pytest.mark.parametrize("seed", range(3))
def test_greedy_matches_textbook(seed, backend):
    ps = generate_pointset("uniform", 2, 25, seed)
    sp, _ = _build(ps, 0.2, "greedy", backend=backend)
    assert [(i, j) for i, j, _ in sp.edges] == _greedy_reference(ps, 0.2)


def test_verify_stretch_complete_and_path():
    ps = generate_pointset("normal", 2, 9, 0)
    d = brute_distances(ps.points)
    full = Spanner(9, [(i, j, d[i, j]) for i, j in itertools.combinations(range(9), 2)], 0.1, 0, "x")
    assert verify_stretch(full, ps) == 1.0
    line = PointSet(np.array([[0.0], [1.0], [2.0]]))
    path = Spanner(3, [(0, 1, 1.0), (1, 2, 1.0)], 0.1, 0, "x")
    assert verify_stretch(path, line) == 1.0


def test_verify_stretch_star():
    ps = PointSet(np.array([[0.0, 0.0], [2.0, 0.1], [-1.0, 1.5], [0.3, -2.2]]))
    d = brute_distances(ps.points)
    star = Spanner(4, [(0, k, d[0, k]) for k in (1, 2, 3)], 0.1, 0, "x")
    sp = dijkstra_all(4, star.edges)
    expected = max(sp[i, j] / d[i, j] for i, j in itertools.combinations(range(4), 2))
    assert verify_stretch(star, ps) == pytest.approx(expected, rel=1e-12)


def test_verify_stretch_disconnected_and_duplicates():
    ps = PointSet(np.array([[0.0], [1.0], [1.0]]))
    assert verify_stretch(Spanner(3, [(0, 1, 1.0)], 0.1, 0, "x"), ps) == math.inf
    # 0/0 counts as 1 once the duplicates are joined
    assert verify_stretch(Spanner(3, [(0, 1, 1.0), (1, 2, 0.0)], 0.1, 0, "x"), ps) == 1.0


def test_shortest_paths_matches_dijkstra():
    rng = np.random.default_rng(3)
    edges = [(int(i), int(j), float(w)) for i, j, w in
             zip(rng.integers(0, 10, 30), rng.integers(0, 10, 30), rng.uniform(0, 3, 30)) if i != j]
    np.testing.assert_allclose(shortest_paths(10, edges), dijkstra_all(10, edges))


def test_fresh_greedy_selection_is_uniform():
    m = BoundMatrix(4, threshold=1.1)
    rng = np.random.default_rng(0)
    counts = {}
    for _ in range(3000):
        p = select_next_pair(Strategy("blind_greedy"), m, None, rng)
        counts[p] = counts.get(p, 0) + 1
    assert set(counts) == set(itertools.combinations(range(4), 2))
    assert min(counts.values()) > 400  # expected 500 each


def test_single_violating_pair_any_strategy():
    ps = PointSet(np.array([[0.0], [1.0], [3.0]]))
    d = brute_distances(ps.points)
    for name in BLIND_STRATEGIES:
        m = BoundMatrix(3, threshold=1.1)
        m.update(0, 1, d[0, 1])
        m.update(0, 2, d[0, 2])
        # (1,2) has bounds [2, 4]: the only violator
        o = DistanceOracle(ps, approx_seed=1)
        p = select_next_pair(Strategy.parse(name), m, o, np.random.default_rng(0))
        assert p == (1, 2)


def test_quasi_sorted_shaker_trace():
    # collinear 0, 1, 3, 7 with A = 1.5 * d (hand-chosen table)
    ps = PointSet(np.array([[0.0], [1.0], [3.0], [7.0]]))
    d = brute_distances(ps.points)
    o = DistanceOracle(ps, approx_table=1.5 * d)
    m = BoundMatrix(4, threshold=1.1)
    sel = make_selector(Strategy("quasi_sorted_shaker"), m, o, None)
    picks = []
    while (p := sel.next_pair()) is not None:
        # brute force: smallest-A violator on odd picks, largest on even picks
        viol = [q for q in itertools.combinations(range(4), 2) if m.ratio(*q) > 1.1]
        key = (lambda q: (1.5 * d[q], q))
        expect = min(viol, key=key) if len(picks) % 2 == 0 else max(viol, key=key)
        assert p == expect
        picks.append(p)
        m.update(*p, d[p])
    # first pick is the shortest pair, second the longest
    assert picks[:2] == [(0, 1), (0, 3)]


def test_quasi_sorted_greedy_ascending():
    ps = generate_pointset("uniform", 2, 12, 3)
    o = DistanceOracle(ps, approx_seed=5)
    sp = build_blind_spanner(o, 0.1, "quasi_sorted_greedy")
    a = o.approx_table
    keys = [(a[i, j], i, j) for i, j, _ in sp.edges]
    assert keys == sorted(keys)


@pytest.mark.parametrize("shaker", [False, True])
def test_full_sweep_queries_in_sweep_order(shaker):
    ps = generate_pointset("normal", 2, 25, 6)
    o = DistanceOracle(ps, approx_seed=2)
    name = "quasi_sorted_shaker_full_sweep" if shaker else "quasi_sorted_greedy_full_sweep"
    sp = build_blind_spanner(o, 0.1, name)
    a = o.approx_table
    order = sorted((a[i, j], i, j) for i, j in itertools.combinations(range(25), 2))
    if shaker:
        # alternate ends of the ascending order: first, last, second, second to last, ...
        expect = [order[k // 2] if k % 2 == 0 else order[-1 - k // 2] for k in range(len(order))]
    else:
        expect = order
    got = [(a[i, j], i, j) for i, j, _ in sp.edges]
    assert got == expect[: len(got)]
    assert stretch_ok(sp, ps)
    # stopping one query earlier would have left a violation
    m = BoundMatrix(25, threshold=1.1)
    for i, j, w in sp.edges[:-1]:
        m.update(i, j, w)
    assert m.scan()[0] > 0


def test_full_sweep_not_sparser_than_skipping():
    for seed in range(3):
        ps = generate_pointset("normal", 2, 40, seed)
        for kind in ("quasi_sorted_greedy", "quasi_sorted_shaker"):
            skip, _ = _build(ps, 0.1, kind, seed)
            full, _ = _build(ps, 0.1, kind + "_full_sweep", seed)
            assert full.n_edges >= skip.n_edges


def test_blind_greedy_serves_infinite_ratios_first():
    # b = inf and a = 0 both give ratio inf; those pairs tie and go first
    ps = generate_pointset("uniform", 2, 30, 1)
    o = DistanceOracle(ps)
    m = BoundMatrix(30, threshold=1.1)
    sel = make_selector(Strategy("blind_greedy"), m, o, np.random.default_rng(0))
    d = ps.distance_matrix()
    seen_finite = False
    while (p := sel.next_pair()) is not None:
        r = m.ratio(*p)
        if r < math.inf:
            seen_finite = True
            assert m.scan()[3] == r
        else:
            assert not seen_finite
        m.update(*p, d[p])


def test_connect_first_variant():
    ps = generate_pointset("normal", 2, 25, 2)
    o = DistanceOracle(ps)
    m = BoundMatrix(25, threshold=1.1)
    sel = make_selector(Strategy("blind_random", connect_first=True), m, o, np.random.default_rng(1))
    d = ps.distance_matrix()
    for _ in range(24):
        i, j = sel.next_pair()
        assert m.upper(i, j) == math.inf
        m.update(i, j, d[i, j])


def test_lower_bound_first_variant():
    ps = generate_pointset("normal", 2, 25, 2)
    o = DistanceOracle(ps)
    m = BoundMatrix(25, threshold=1.1)
    sel = make_selector(Strategy("blind_random", lower_bound_first=True), m, o, np.random.default_rng(1))
    d = ps.distance_matrix()
    while m.scan()[2]:
        i, j = sel.next_pair()
        assert m.lower(i, j) == 0.0
        m.update(i, j, d[i, j])


@pytest.mark.parametrize("name", ALL)
def test_determinism(name):
    ps = generate_pointset("clustered", 2, 60, 4)
    a, _ = _build(ps, 0.2, name, seed=9)
    b, _ = _build(ps, 0.2, name, seed=9)
    assert a.edges == b.edges


def test_rejects_bad_eps():
    o = DistanceOracle(generate_pointset("uniform", 2, 5, 0))
    for eps in (0.0, -1.0):
        with pytest.raises(ValueError):
            build_blind_spanner(o, eps)
        with pytest.raises(ValueError):
            build_greedy_spanner(o, eps)


def test_text_roundtrip(tmp_path):
    ps = generate_pointset("uniform", 2, 20, 0)
    sp, _ = _build(ps, 0.1, "blind_greedy", seed=3)
    sp.write(tmp_path / "s.txt")
    head = (tmp_path / "s.txt").read_text().splitlines()[0].split()
    assert head == ["20", "0.1", "blind_greedy", "3", str(sp.queries_used)]
    back = Spanner.from_text((tmp_path / "s.txt").read_text())
    assert back.edges == sp.edges and back.queries_used == sp.queries_used


def test_blind_greedy_400_between_greedy_and_complete():
    ps = generate_pointset("uniform", 2, 400, 0)
    sp, _ = _build(ps, 0.1, "blind_greedy")
    assert 399 < sp.n_edges < 79800
    assert sp.n_edges == sp.queries_used


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(ALL), st.sampled_from(["uniform", "normal", "clustered", "exp"]),
       st.integers(2, 5), st.integers(2, 45), st.sampled_from([0.05, 0.1, 0.5, 2.0]))
def test_stretch_and_accounting_property(seed, name, kind, dim, n, eps):
    ps = generate_pointset(kind, dim, n, seed)
    sp, o = _build(ps, eps, name, seed)
    assert stretch_ok(sp, ps)
    d = brute_distances(ps.points)
    assert all(w == pytest.approx(d[i, j], rel=1e-12, abs=1e-300) for i, j, w in sp.edges)
    if name == "greedy":
        assert sp.queries_used == n * (n - 1) // 2
    else:
        assert sp.queries_used == sp.n_edges == o.exact_query_count
        assert len({(i, j) for i, j, _ in sp.edges}) == sp.n_edges


def test_full_sweep_ordering_small_scale():
    # normal points, dim 2, eps 0.1, n = 100, 5 seeds: the sweep-everything
    # variants land near the complete graph, behind every blind_random variant
    from fmetric.harness import ExperimentSpec, run_cells

    names = list(BLIND_STRATEGIES[:5]) + list(FULL_SWEEP_STRATEGIES)
    rows = run_cells(ExperimentSpec(task="spanner", generator="normal", ns=[100], eps=[0.1],
                                    strategies=names, seeds=list(range(5))))
    e = {s: sum(r.edges for r in rows if r.strategy == s) / 5 for s in names}
    rnd = [s for s in names if s.startswith("blind_random")]
    assert all(e["blind_greedy"] < e[r] for r in rnd)
    assert all(e[r] < e[f] for r in rnd for f in FULL_SWEEP_STRATEGIES)
    assert e["quasi_sorted_shaker_full_sweep"] <= e["quasi_sorted_greedy_full_sweep"]
    assert e["quasi_sorted_greedy_full_sweep"] >= 0.95 * 4950
