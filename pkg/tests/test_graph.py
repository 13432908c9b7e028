import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from forestlll.core import Instance, MonochromaticEvent
from forestlll.graph import (
    FaceSet,
    SimpleGraph,
    all_even_paths,
    all_stars,
    d_s_exact,
    even_paths_through,
    facial_paths,
    format_edge_list,
    max_degree,
    parse_edge_list,
    parse_faces,
    stars,
)


def brute_paths(graph, length):
    """Vertex sequences of ``length`` distinct vertices, consecutive ones adjacent, one orientation."""
    out = set()
    for seq in itertools.permutations(range(graph.n), length):
        if all(graph.has_edge(a, b) for a, b in zip(seq, seq[1:])):
            out.add(min(seq, seq[::-1]))
    return out


def brute_stars(graph, beta):
    out = set()
    for sigma in itertools.combinations(range(graph.n), beta + 1):
        if any(all(graph.has_edge(c, v) for v in sigma) for c in range(graph.n)):
            out.add(sigma)
    return out


@st.composite
def small_graphs(draw, max_n=8):
    n = draw(st.integers(2, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return SimpleGraph(n, edges)


def test_max_degree_examples():
    assert max_degree(SimpleGraph.path(2)) == 1
    assert max_degree(SimpleGraph.cycle(5)) == 2
    assert max_degree(SimpleGraph.star(4)) == 4
    assert max_degree(SimpleGraph(3)) == 0


def test_graph_rejects_loops_and_bad_vertices():
    with pytest.raises(ValueError):
        SimpleGraph(3, [(1, 1)])
    with pytest.raises(ValueError):
        SimpleGraph(3, [(0, 3)])
    g = SimpleGraph(3, [(0, 1), (1, 0), (1, 2)])
    assert g.edges == ((0, 1), (1, 2))


def test_even_paths_examples():
    assert even_paths_through(SimpleGraph.path(2), 0, 1) == [(0, 1)]
    c4 = SimpleGraph.cycle(4)
    for v in range(4):
        assert len(even_paths_through(c4, v, 1)) == 2
    c6 = SimpleGraph.cycle(6)
    expected = [p for p in brute_paths(c6, 6) if 0 in p]
    assert sorted(expected) == even_paths_through(c6, 0, 3)
    assert len(expected) == 6  # drop any one of the six edges


@settings(max_examples=40, deadline=None)
@given(small_graphs(), st.integers(1, 2))
def test_even_paths_match_brute_force(g, n):
    brute = brute_paths(g, 2 * n)
    assert set(all_even_paths(g, n)) == brute
    assert len(all_even_paths(g, n)) == len(brute)
    delta = max_degree(g)
    for v in range(g.n):
        through = even_paths_through(g, v, n)
        assert set(through) == {p for p in brute if v in p}
        assert len(through) <= n * delta ** (2 * n - 1)


def test_facial_path_examples():
    tri = SimpleGraph.cycle(3)
    assert len(facial_paths(tri, FaceSet(tri, ((0, 1, 2),)), 1)) == 3
    quad = SimpleGraph.cycle(4)
    assert len(facial_paths(quad, FaceSet(quad, ((0, 1, 2, 3),)), 2)) == 4
    with pytest.raises(ValueError):
        FaceSet(quad, ((0, 2, 1, 3),))


def wheel(spokes):
    """Plane wheel: hub 0, rim 1..spokes; triangular inner faces plus the outer rim face."""
    edges = [(0, i) for i in range(1, spokes + 1)]
    edges += [(i, i % spokes + 1) for i in range(1, spokes + 1)]
    g = SimpleGraph(spokes + 1, edges)
    faces = [(0, i, i % spokes + 1) for i in range(1, spokes + 1)]
    faces.append(tuple(range(1, spokes + 1)))
    return g, FaceSet(g, tuple(faces))


@pytest.mark.parametrize("spokes", [3, 4, 5, 7])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_facial_path_membership_bound(spokes, n):
    g, faces = wheel(spokes)
    paths = facial_paths(g, faces, n)
    assert len(set(paths)) == len(paths)
    for e in range(len(g.edges)):
        assert sum(e in p for p in paths) <= 4 * n
    # every path is a run of consecutive edges along one face boundary
    rings = [faces.boundary_edges(f) for f in faces.faces]
    for p in paths:
        assert any(
            any(tuple(r[(i + j) % len(r)] for j in range(2 * n)) in (p, p[::-1]) for i in range(len(r)))
            for r in rings
        )


def test_stars_examples():
    k13 = SimpleGraph.star(3)  # center 0, leaves 1..3
    assert stars(k13, 1, 2) == [(1, 2, 3)]
    tri = SimpleGraph.cycle(3)
    assert stars(tri, 0, 1) == [(0, 1), (0, 2)]


@settings(max_examples=40, deadline=None)
@given(small_graphs(), st.integers(1, 3))
def test_stars_match_brute_force(g, beta):
    brute = brute_stars(g, beta)
    assert set(all_stars(g, beta)) == brute
    delta = max_degree(g)
    for v in range(g.n):
        through = stars(g, v, beta)
        assert set(through) == {s for s in brute if v in s}
        assert len(through) <= delta * math.comb(delta, beta)


def test_d_s_exact_examples():
    c4 = SimpleGraph.cycle(4)
    inst = Instance.uniform(4, 2, [MonochromaticEvent(e) for e in c4.edges])
    assert d_s_exact(inst, 1) == 2
    empty = Instance.uniform(3, 2, [])
    assert d_s_exact(empty, 1) == 0 and d_s_exact(empty, 4) == 0


def test_edge_list_roundtrip(tmp_path):
    g = SimpleGraph(6, [(0, 1), (1, 2), (3, 4)])  # vertex 5 isolated
    text = format_edge_list(g)
    again = parse_edge_list(text)
    assert again.n == 6 and again.edges == g.edges
    assert parse_edge_list("# comment\n0 1\n\n1 2  # trailing\n").edges == ((0, 1), (1, 2))
    with pytest.raises(ValueError):
        parse_edge_list("0 1 2\n")
    faces = parse_faces("0 1 2\n", SimpleGraph.cycle(3))
    assert faces.faces == ((0, 1, 2),)
