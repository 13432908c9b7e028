import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from forestlll.applications import (
    FacialThueSpec,
    FrugalSpec,
    NonrepetitiveSpec,
    build_facial_thue_instance,
    build_frugal_instance,
    build_instance,
    build_nonrepetitive_instance,
    facial_spectrum,
    frugal_bound,
    frugal_closed_form,
    frugal_spectrum,
    nonrepetitive_bounds,
    nonrepetitive_crossover,
    nonrepetitive_spectrum,
    verify_solution,
)
from forestlll.core import event_probability, occurs
from forestlll.criteria import HOLDS, min_ratio, phi, spectrum_from_instance
from forestlll.graph import FaceSet, SimpleGraph, d_s_exact, max_degree
from forestlll.solvers import forest_algorithm, moser_tardos_resampling, trial_rng


def wheel(spokes):
    edges = [(0, i) for i in range(1, spokes + 1)] + [(i, i % spokes + 1) for i in range(1, spokes + 1)]
    g = SimpleGraph(spokes + 1, edges)
    faces = [(0, i, i % spokes + 1) for i in range(1, spokes + 1)] + [tuple(range(1, spokes + 1))]
    return g, FaceSet(g, tuple(faces))


def brute_repetitive_paths(graph, colors, L_max):
    """Scan every vertex sequence directly."""
    for n in range(1, L_max + 1):
        for seq in itertools.permutations(range(graph.n), 2 * n):
            if all(graph.has_edge(a, b) for a, b in zip(seq, seq[1:])):
                if all(colors[seq[i]] == colors[seq[i + n]] for i in range(n)):
                    return True
    return False


# -- nonrepetitive


def test_nonrepetitive_instance_examples():
    inst = build_nonrepetitive_instance(NonrepetitiveSpec(SimpleGraph.path(2), 3, 1))
    assert len(inst.events) == 1 and inst.events[0].power == 1
    inst = build_nonrepetitive_instance(NonrepetitiveSpec(SimpleGraph.cycle(4), 3, 1))
    assert len(inst.events) == 4
    inst = build_nonrepetitive_instance(NonrepetitiveSpec(SimpleGraph.grid(3, 3), 5, 3))
    for e in inst.events:
        n = len(e.support) // 2
        assert e.power == n
        assert event_probability(e, inst) == Fraction(1, 5**n)
        # the seed is the half away from the queried vertex
        for x in e.support:
            half = e.support[:n] if x in e.support[n:] else e.support[n:]
            assert set(e.seed_for(x)) == set(half)


@pytest.mark.parametrize("graph", [SimpleGraph.grid(3, 3), SimpleGraph.cycle(7), SimpleGraph.star(4), wheel(5)[0]])
def test_nonrepetitive_d_s_below_analytic(graph):
    delta = max_degree(graph)
    inst = build_nonrepetitive_instance(NonrepetitiveSpec(graph, 4, 3))
    for s in (1, 2, 3):
        assert d_s_exact(inst, s) <= s * delta ** (2 * s - 1)


@pytest.mark.parametrize("delta", [3, 4, 10, 100])
def test_nonrepetitive_bounds_residual(delta):
    b = nonrepetitive_bounds(delta)
    assert b.residual < 1e-9
    assert b.pi_bound == pytest.approx((1 + b.b0) * delta**2)
    assert b.gmp_bound is not None


def test_nonrepetitive_bounds_edge_cases():
    assert nonrepetitive_bounds(2).gmp_bound is None
    with pytest.raises(ValueError):
        nonrepetitive_bounds(1)


def test_b0_strictly_decreasing():
    b0 = [nonrepetitive_bounds(d).b0 for d in range(2, 200)]
    assert all(a > b for a, b in zip(b0, b0[1:]))


@pytest.mark.parametrize("delta", [3, 5, 10, 40])
def test_xi0_matches_numeric_minimizer(delta):
    b = nonrepetitive_bounds(delta)
    k = (1 + b.b0) * delta**2
    r = min_ratio(nonrepetitive_spectrum(delta, k))
    assert r.xi_star == pytest.approx(b.xi0, abs=1e-6)
    assert r.rho == pytest.approx(1.0, abs=1e-6)


def test_crossover_reported():
    d = nonrepetitive_crossover(10**4)
    assert d is not None and d > 3
    assert nonrepetitive_bounds(d - 1).pi_bound < nonrepetitive_bounds(d - 1).gmp_bound
    assert nonrepetitive_bounds(d).pi_bound >= nonrepetitive_bounds(d).gmp_bound


def test_truncated_spectrum_is_weaker_than_full():
    for k in (20, 30, 60):
        full = min_ratio(nonrepetitive_spectrum(4, k)).rho
        trunc = min_ratio(nonrepetitive_spectrum(4, k, L_max=3)).rho
        assert trunc <= full + 1e-12


# -- facial Thue


def test_facial_instance_examples():
    tri = SimpleGraph.cycle(3)
    spec = FacialThueSpec.with_common_list(tri, FaceSet(tri, ((0, 1, 2),)), 4, 1)
    inst = build_facial_thue_instance(spec)
    assert len(inst.events) == 3 and all(e.power == 1 for e in inst.events)
    g, faces = wheel(5)
    spec = FacialThueSpec.with_common_list(g, faces, 3, 2)
    inst = build_facial_thue_instance(spec)
    for e in inst.events:
        assert event_probability(e, inst) == Fraction(1, 3 ** (len(e.support) // 2))
    for s in (1, 2):
        assert d_s_exact(inst, s) <= 4 * s


def test_facial_distinct_lists_probability_at_most_uniform():
    g, faces = wheel(4)
    rng = np.random.default_rng(5)
    lists = [tuple(int(c) for c in rng.choice(6, 3, replace=False)) for _ in g.edges]
    inst = build_facial_thue_instance(FacialThueSpec(g, faces, lists, 2))
    for e in inst.events:
        assert event_probability(e, inst) <= Fraction(1, 3 ** (len(e.support) // 2))


def test_facial_dedup_on_shared_segments():
    # a 4-cycle with both faces equal to the same ring: every path appears twice
    g = SimpleGraph.cycle(4)
    one = build_facial_thue_instance(FacialThueSpec.with_common_list(g, FaceSet(g, ((0, 1, 2, 3),)), 3, 2))
    two = build_facial_thue_instance(
        FacialThueSpec.with_common_list(g, FaceSet(g, ((0, 1, 2, 3), (0, 3, 2, 1))), 3, 2)
    )
    assert len(one.events) == len(two.events)


def test_facial_criterion_at_13_holds():
    assert min_ratio(facial_spectrum(13)).verdict == HOLDS
    assert min_ratio(facial_spectrum(11)).rho > 1


@pytest.mark.parametrize("k", [12, 13, 20, 28, 100])
def test_facial_minimizer_closed_form(k):
    # stationarity of 4k(xi+1)/(xi(k-xi-1)^2) reduces to 2 xi^2 + 3 xi + 1 = k
    r = min_ratio(facial_spectrum(k))
    assert r.xi_star == pytest.approx((math.sqrt(8 * k + 1) - 3) / 4, abs=1e-9)
    assert r.rho == pytest.approx(4 * k * (r.xi_star + 1) / (r.xi_star * (k - r.xi_star - 1) ** 2), rel=1e-12)


# -- frugal


def test_frugal_instance_examples():
    tri = SimpleGraph.cycle(3)
    inst = build_frugal_instance(FrugalSpec(tri, 5, 1))
    edge_events = inst.events[:3]
    assert [e.support for e in edge_events] == [(0, 1), (0, 2), (1, 2)]
    # beta = 1: stars are pairs sharing a neighbour, i.e. every pair of the triangle
    assert len(inst.events) == 6
    for e in edge_events:
        assert event_probability(e, inst) == Fraction(1, 5)
    inst = build_frugal_instance(FrugalSpec(SimpleGraph.star(4), 3, 2))
    for e in inst.events[4:]:
        assert e.power == 2 and len(e.support) == 3
        assert event_probability(e, inst) <= Fraction(1, 3**2)


@pytest.mark.parametrize("graph", [SimpleGraph.grid(3, 4), wheel(6)[0], SimpleGraph.complete(5)])
@pytest.mark.parametrize("beta", [2, 3])
def test_frugal_d_s_below_analytic(graph, beta):
    delta = max_degree(graph)
    inst = build_frugal_instance(FrugalSpec(graph, 4, beta))
    edges = [e for e in inst.events if len(e.support) == 2]
    edge_inst = type(inst).uniform(inst.m, 4, edges)
    assert d_s_exact(edge_inst, 1) == delta
    assert d_s_exact(inst, beta) <= delta * math.comb(delta, beta)


@pytest.mark.parametrize("delta,beta", [(10, 2), (20, 3), (50, 4)])
def test_frugal_generic_below_closed_form(delta, beta):
    b = frugal_bound(delta, beta)
    assert b.generic_k <= math.ceil(b.closed_form)
    assert min_ratio(frugal_spectrum(delta, beta, b.generic_k)).verdict == HOLDS
    assert min_ratio(frugal_spectrum(delta, beta, b.generic_k - 1)).verdict != HOLDS


def test_frugal_beta_one():
    b = frugal_bound(10, 1)
    assert b.closed_form is None and b.note
    with pytest.raises(ValueError):
        frugal_closed_form(10, 1)


def test_frugal_bound_decreases_in_beta():
    vals = [frugal_closed_form(30, beta) for beta in range(2, 12)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 30


@pytest.mark.parametrize("xi", [0.1, 0.5, 1.0, 2.5])
def test_frugal_phi_plugin(xi):
    delta, beta, k = 12, 3, 200
    direct = delta / k * (xi + 1) + delta ** (1 + beta) / (math.factorial(beta) * k**beta) * (xi + 1) ** beta
    assert phi(frugal_spectrum(delta, beta, k), xi) == pytest.approx(direct, rel=1e-12)


def test_exact_spectrum_never_weaker_than_analytic():
    g = SimpleGraph.grid(4, 4)
    delta = max_degree(g)
    for k in (40, 60, 90):
        inst = build_nonrepetitive_instance(NonrepetitiveSpec(g, k, 2))
        exact = min_ratio(spectrum_from_instance(inst)).rho
        bound = min_ratio(nonrepetitive_spectrum(delta, k, L_max=2)).rho
        assert exact <= bound + 1e-12


# -- verification


def test_verify_examples():
    p4 = SimpleGraph.path(4)
    assert not verify_solution(NonrepetitiveSpec(p4, 3, 2), (1, 2, 1, 2))
    assert verify_solution(NonrepetitiveSpec(p4, 3, 1), (1, 2, 1, 2))
    g = SimpleGraph.grid(3, 3)
    assert verify_solution(NonrepetitiveSpec(g, 9, 4), range(9))
    star = SimpleGraph.star(3)
    assert not verify_solution(FrugalSpec(star, 3, 2), (0, 1, 1, 1))
    assert verify_solution(FrugalSpec(star, 3, 3), (0, 1, 1, 1))
    assert not verify_solution(FrugalSpec(star, 3, 3), (1, 1, 2, 2))
    tri = SimpleGraph.cycle(3)
    spec = FacialThueSpec.with_common_list(tri, FaceSet(tri, ((0, 1, 2),)), 3, 1)
    assert verify_solution(spec, (0, 1, 2))
    assert not verify_solution(spec, (0, 0, 2))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_nonrepetitive_verifier_matches_brute_scan(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 8))
    pairs = [p for p in itertools.combinations(range(n), 2) if rng.random() < 0.5]
    g = SimpleGraph(n, pairs)
    colors = [int(c) for c in rng.integers(0, 3, n)]
    L = int(rng.integers(1, 4))
    assert verify_solution(NonrepetitiveSpec(g, 3, L), colors) == (not brute_repetitive_paths(g, colors, L))


def test_verify_matches_event_family():
    """For every configuration of a small instance, verifier == no event occurs."""
    g, faces = wheel(3)
    spec = FacialThueSpec.with_common_list(g, faces, 2, 2)
    inst = build_facial_thue_instance(spec)
    for cfg in itertools.product(range(2), repeat=inst.m):
        clean = not any(occurs(e, cfg, inst.labels) for e in inst.events)
        assert verify_solution(spec, cfg) == clean
    spec = NonrepetitiveSpec(SimpleGraph.cycle(5), 3, 2)
    inst = build_nonrepetitive_instance(spec)
    for cfg in itertools.product(range(3), repeat=inst.m):
        clean = not any(occurs(e, cfg, inst.labels) for e in inst.events)
        assert verify_solution(spec, cfg) == clean


SPECS = [
    NonrepetitiveSpec(SimpleGraph.grid(3, 3), 12, 2),
    FacialThueSpec.with_common_list(*wheel(5), 8, 2),
    FrugalSpec(SimpleGraph.grid(3, 4), 8, 2),
]


@pytest.mark.parametrize("spec", SPECS, ids=["nonrep", "facial", "frugal"])
def test_solver_oracle_agreement(spec):
    inst = build_instance(spec)
    for t in range(60):
        cfg, _, st_ = forest_algorithm(inst, trial_rng(21, t)[0], step_cap=100_000)
        assert st_.success and verify_solution(spec, cfg)
        cfg, st_ = moser_tardos_resampling(inst, trial_rng(22, t)[0], step_cap=100_000)
        assert st_.success and verify_solution(spec, cfg)

