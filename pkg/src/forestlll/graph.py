"""Simple graphs, face sets, and the enumerators that generate event families."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

from .core import Instance


class SimpleGraph:
    """Undirected simple graph on vertices ``0..n-1`` with sorted adjacency lists."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        self.n = int(n)
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside 0..{self.n - 1}")
            adj[u].add(v)
            adj[v].add(u)
        self.adj: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(a)) for a in adj)
        self._adjset = tuple(frozenset(a) for a in self.adj)
        self.edges: tuple[tuple[int, int], ...] = tuple(
            (u, v) for u in range(self.n) for v in self.adj[u] if u < v
        )
        self.edge_index = {e: i for i, e in enumerate(self.edges)}

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adjset[u]

    def edge_id(self, u: int, v: int) -> int:
        return self.edge_index[(u, v) if u < v else (v, u)]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def __repr__(self):
        return f"SimpleGraph(n={self.n}, m={len(self.edges)})"

    # constructors used throughout tests and demos
    @classmethod
    def path(cls, n: int) -> "SimpleGraph":
        return cls(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def cycle(cls, n: int) -> "SimpleGraph":
        return cls(n, [(i, (i + 1) % n) for i in range(n)])

    @classmethod
    def complete(cls, n: int) -> "SimpleGraph":
        return cls(n, itertools.combinations(range(n), 2))

    @classmethod
    def star(cls, leaves: int) -> "SimpleGraph":
        return cls(leaves + 1, [(0, i) for i in range(1, leaves + 1)])

    @classmethod
    def grid(cls, rows: int, cols: int) -> "SimpleGraph":
        idx = lambda r, c: r * cols + c
        edges = [(idx(r, c), idx(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
        edges += [(idx(r, c), idx(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
        return cls(rows * cols, edges)


def max_degree(graph: SimpleGraph) -> int:
    return max((len(a) for a in graph.adj), default=0)


@dataclass(frozen=True)
class FaceSet:
    """Faces of a plane graph as cyclic vertex sequences. Planarity is not checked."""

    graph: SimpleGraph
    faces: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        faces = tuple(tuple(int(v) for v in f) for f in self.faces)
        for f in faces:
            if len(f) < 3:
                raise ValueError(f"face {f} has fewer than three vertices")
            for a, b in zip(f, f[1:] + f[:1]):
                if not self.graph.has_edge(a, b):
                    raise ValueError(f"face {f}: vertices {a} and {b} are not adjacent")
        object.__setattr__(self, "faces", faces)

    def boundary_edges(self, face: tuple[int, ...]) -> list[int]:
        return [self.graph.edge_id(a, b) for a, b in zip(face, face[1:] + face[:1])]


def _canonical(path: tuple) -> tuple:
    return path if path[0] < path[-1] else path[::-1]


def _simple_paths_from(graph: SimpleGraph, start: int, length: int):
    """All simple paths with ``length`` vertices starting at ``start`` (DFS, visited pruning)."""
    stack = [(start,)]
    while stack:
        p = stack.pop()
        if len(p) == length:
            yield p
            continue
        for w in graph.adj[p[-1]]:
            if w not in p:
                stack.append(p + (w,))


def even_paths_through(graph: SimpleGraph, vertex: int, n: int) -> list[tuple[int, ...]]:
    """Simple paths with ``2n`` vertices containing ``vertex``, one orientation each."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = 2 * n
    arms: dict[int, list[tuple[int, ...]]] = {
        j: list(_simple_paths_from(graph, vertex, j + 1)) for j in range(total)
    }
    found = set()
    for left in range(total):
        right = total - 1 - left
        for a in arms[left]:
            sa = set(a[1:])
            for b in arms[right]:
                if sa.isdisjoint(b[1:]):
                    found.add(_canonical(a[::-1] + b[1:]))
    return sorted(found)


def all_even_paths(graph: SimpleGraph, n: int) -> list[tuple[int, ...]]:
    """Every simple path with ``2n`` vertices, canonical orientation, sorted."""
    out = []
    for v in range(graph.n):
        out.extend(p for p in _simple_paths_from(graph, v, 2 * n) if p[0] < p[-1])
    return sorted(out)


def facial_paths(graph: SimpleGraph, faces: FaceSet, n: int) -> list[tuple[int, ...]]:
    """Edge sequences of ``2n`` consecutive boundary edges of some face.

    Sequences are deduplicated up to reversal; a window may close the whole face
    when its length equals the face length.
    """
    if faces.graph is not graph:
        faces = FaceSet(graph, faces.faces)
    length = 2 * n
    found = set()
    for face in faces.faces:
        ring = faces.boundary_edges(face)
        if length > len(ring):
            continue
        for i in range(len(ring)):
            seq = tuple(ring[(i + j) % len(ring)] for j in range(length))
            found.add(min(seq, seq[::-1]))
    return sorted(found)


def stars(graph: SimpleGraph, vertex: int, beta: int) -> list[tuple[int, ...]]:
    """Sets of ``beta + 1`` vertices inside one neighborhood ``N(c)`` that contain ``vertex``."""
    if beta < 1:
        raise ValueError("beta must be >= 1")
    found = set()
    for c in graph.adj[vertex]:
        others = [u for u in graph.adj[c] if u != vertex]
        for combo in itertools.combinations(others, beta):
            found.add(tuple(sorted(combo + (vertex,))))
    return sorted(found)


def all_stars(graph: SimpleGraph, beta: int) -> list[tuple[int, ...]]:
    found = set()
    for c in range(graph.n):
        found.update(itertools.combinations(graph.adj[c], beta + 1))
    return sorted(found)


def d_s_exact(instance: Instance, s: int) -> int:
    """Largest number of power-``s`` events sharing one atom."""
    best = 0
    for ids in instance.incidence:
        best = max(best, sum(1 for i in ids if instance.events[i].power == s))
    return best


# --------------------------------------------------------------------------- text formats


def parse_edge_list(text: str) -> SimpleGraph:
    """``u v`` per line, 0-indexed; ``#`` comments and blank lines ignored.

    A line holding a single integer declares the vertex count (useful for
    isolated trailing vertices); otherwise it is inferred.
    """
    edges, n = [], 0
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 1:
            n = max(n, int(parts[0]))
            continue
        if len(parts) != 2:
            raise ValueError(f"malformed edge line: {line!r}")
        u, v = int(parts[0]), int(parts[1])
        edges.append((u, v))
        n = max(n, u + 1, v + 1)
    return SimpleGraph(n, edges)


def parse_faces(text: str, graph: SimpleGraph) -> FaceSet:
    faces = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            faces.append(tuple(int(v) for v in line.split()))
    return FaceSet(graph, tuple(faces))


def read_edge_list(path) -> SimpleGraph:
    with open(path) as fh:
        return parse_edge_list(fh.read())


def read_faces(path, graph: SimpleGraph) -> FaceSet:
    with open(path) as fh:
        return parse_faces(fh.read(), graph)


def format_edge_list(graph: SimpleGraph) -> str:
    return f"{graph.n}\n" + "".join(f"{u} {v}\n" for u, v in graph.edges)
