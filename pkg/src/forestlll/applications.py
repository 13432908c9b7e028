"""Nonrepetitive vertex coloring, facial Thue list edge coloring, and frugal coloring.

Each problem has a spec dataclass, an instance builder, closed-form bounds, and
an independent solution verifier that does not go through the event family.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from scipy import optimize

from .core import Instance, MonochromaticEvent, RepetitionEvent
from .criteria import GeometricTail, PowerSpectrum, min_ratio, HOLDS
from .graph import FaceSet, SimpleGraph, all_even_paths, all_stars, facial_paths, max_degree


@dataclass(frozen=True)
class NonrepetitiveSpec:
    graph: SimpleGraph
    k: int
    L_max: int

    def __post_init__(self):
        if self.k < 1 or self.L_max < 1:
            raise ValueError("need k >= 1 and L_max >= 1")


@dataclass(frozen=True)
class FacialThueSpec:
    graph: SimpleGraph
    faces: FaceSet
    lists: tuple[tuple[int, ...], ...]
    L_max: int

    def __post_init__(self):
        lists = tuple(tuple(int(c) for c in row) for row in self.lists)
        if len(lists) != len(self.graph.edges):
            raise ValueError("one color list per edge required")
        if len({len(r) for r in lists}) > 1:
            raise ValueError("all color lists must have the same size")
        if self.L_max < 1:
            raise ValueError("L_max must be >= 1")
        object.__setattr__(self, "lists", lists)

    @property
    def k(self) -> int:
        return len(self.lists[0]) if self.lists else 0

    @classmethod
    def with_common_list(cls, graph: SimpleGraph, faces: FaceSet, k: int, L_max: int):
        return cls(graph, faces, tuple(tuple(range(k)) for _ in graph.edges), L_max)


@dataclass(frozen=True)
class FrugalSpec:
    graph: SimpleGraph
    k: int
    beta: int

    def __post_init__(self):
        if self.k < 1 or self.beta < 1:
            raise ValueError("need k >= 1 and beta >= 1")


# --------------------------------------------------------------------------- nonrepetitive


def build_nonrepetitive_instance(spec: NonrepetitiveSpec) -> Instance:
    """One repetition event per path with ``2n`` vertices, ``n = 1..L_max``."""
    events = [
        RepetitionEvent(p)
        for n in range(1, spec.L_max + 1)
        for p in all_even_paths(spec.graph, n)
    ]
    return Instance.uniform(spec.graph.n, spec.k, events)


def _nonrep_g(b: float) -> float:
    return (math.sqrt((8 * b + 9) ** 3) + 8 * b * b + 36 * b + 27) / (8 * b**3)


@dataclass(frozen=True)
class NonrepetitiveBounds:
    delta: int
    b0: float
    pi_bound: float
    gmp_bound: float | None
    residual: float
    xi0: float


def nonrepetitive_bounds(delta: int) -> NonrepetitiveBounds:
    """``b0`` solving ``g(b) = delta``, the bound ``(1 + b0) delta^2``, and the comparison bound.

    The comparison bound needs ``delta^(1/3) > 2^(1/3)``; at ``delta = 2`` it is ``None``.
    """
    if delta < 2:
        raise ValueError("delta must be >= 2")
    lo, hi = 1.0, 1.0
    while _nonrep_g(lo) < delta:
        lo /= 2
    while _nonrep_g(hi) > delta:
        hi *= 2
    b0 = optimize.brentq(lambda b: _nonrep_g(b) - delta, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    gmp = None
    if delta > 2:
        gmp = delta**2 + delta**1.5 * (3 / 2 ** (2 / 3) + 2 ** (2 / 3) / (delta ** (1 / 3) - 2 ** (1 / 3)))
    xi0 = (math.sqrt(9 + 8 * b0) - 3) / 4
    return NonrepetitiveBounds(delta, b0, (1 + b0) * delta**2, gmp, abs(_nonrep_g(b0) - delta), xi0)


def nonrepetitive_crossover(delta_max: int = 10**6) -> int | None:
    """Smallest ``delta >= 3`` at which the comparison bound is no longer larger, if any."""
    prev_better = None
    d = 3
    while d <= delta_max:
        b = nonrepetitive_bounds(d)
        if b.pi_bound >= b.gmp_bound:
            return d
        prev_better = d
        d = d + 1 if d < 1000 else int(d * 1.01) + 1
    return None if prev_better else 3


def nonrepetitive_spectrum(delta: float, k: float, L_max: int | None = None) -> PowerSpectrum:
    """Spectrum with ``p_s = k^-s`` and ``d_s = s delta^(2s-1)``: full series, or truncated at ``L_max``."""
    if L_max is None:
        return PowerSpectrum(tail=GeometricTail(1, 1.0 / k, (0.0, 1.0 / delta), float(delta) ** 2))
    return PowerSpectrum({s: (k ** (-s), s * float(delta) ** (2 * s - 1)) for s in range(1, L_max + 1)})


# --------------------------------------------------------------------------- facial Thue


def build_facial_thue_instance(spec: FacialThueSpec) -> Instance:
    """Atoms are edges choosing from their lists; one event per facial path of ``2n`` edges.

    Sequences that impose the same equalities on the same edges are one event.
    """
    events, seen = [], set()
    for n in range(1, spec.L_max + 1):
        for seq in facial_paths(spec.graph, spec.faces, n):
            key = (frozenset(seq), frozenset(frozenset((seq[i], seq[i + n])) for i in range(n)))
            if key in seen:
                continue
            seen.add(key)
            events.append(RepetitionEvent(seq))
    return Instance.uniform(len(spec.graph.edges), spec.k, events, labels=spec.lists)


def facial_spectrum(k: float) -> PowerSpectrum:
    """``p_s = k^-s``, ``d_s = 4s`` for all ``s >= 1``."""
    return PowerSpectrum(tail=GeometricTail(1, 1.0 / k, (0.0, 4.0)))


# --------------------------------------------------------------------------- frugal


def build_frugal_instance(spec: FrugalSpec) -> Instance:
    """Monochromatic edges (power 1) followed by monochromatic beta-stars (power beta)."""
    events = [MonochromaticEvent(e) for e in spec.graph.edges]
    events += [MonochromaticEvent(s) for s in all_stars(spec.graph, spec.beta)]
    return Instance.uniform(spec.graph.n, spec.k, events)


def frugal_spectrum(delta: float, beta: int, k: float) -> PowerSpectrum:
    """``{1: (1/k, delta), beta: (k^-beta, delta^(1+beta)/beta!)}``."""
    d_beta = float(delta) ** (1 + beta) / math.factorial(beta)
    if beta == 1:
        return PowerSpectrum({1: (1.0 / k, delta + d_beta)})
    return PowerSpectrum({1: (1.0 / k, float(delta)), beta: (k ** (-beta), d_beta)})


@dataclass(frozen=True)
class FrugalBound:
    closed_form: float | None
    generic_k: int
    note: str = ""


def frugal_closed_form(delta: float, beta: int) -> float:
    if beta < 2:
        raise ValueError("closed form needs beta >= 2")
    return (delta ** (1 + 1 / beta) / math.factorial(beta) ** (1 / beta)
            * beta * (beta - 1) ** (1 / beta - 1) + delta)


def smallest_k(make_spectrum, k_max: int = 1 << 40) -> int:
    """Least integer ``k`` whose spectrum passes the ratio criterion (monotone in ``k``)."""
    def ok(k):
        return min_ratio(make_spectrum(k)).verdict == HOLDS

    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > k_max:
            raise ValueError("no k below k_max passes")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def frugal_bound(delta: float, beta: int) -> FrugalBound:
    generic = smallest_k(lambda k: frugal_spectrum(delta, beta, k))
    if beta == 1:
        return FrugalBound(None, generic, "closed form undefined at beta = 1; generic search only")
    return FrugalBound(frugal_closed_form(delta, beta), generic)


# --------------------------------------------------------------------------- verification


def _repetitive(colors) -> bool:
    n = len(colors) // 2
    return all(colors[i] == colors[i + n] for i in range(n))


def _nonrep_ok(graph: SimpleGraph, colors, L_max: int) -> bool:
    limit = 2 * L_max
    adj = graph.adj
    on_path = [False] * graph.n

    # every path is visited from both ends; the check is symmetric so that is harmless
    def extend(last, seq):
        size = len(seq)
        if size % 2 == 0 and seq[: size // 2] == seq[size // 2:]:
            return False
        if size == limit:
            return True
        for w in adj[last]:
            if not on_path[w]:
                on_path[w] = True
                seq.append(colors[w])
                ok = extend(w, seq)
                seq.pop()
                on_path[w] = False
                if not ok:
                    return False
        return True

    for v in range(graph.n):
        on_path[v] = True
        ok = extend(v, [colors[v]])
        on_path[v] = False
        if not ok:
            return False
    return True


def verify_solution(spec, config) -> bool:
    """Check a full configuration directly against the problem definition."""
    config = [int(v) for v in config]
    if isinstance(spec, NonrepetitiveSpec):
        if len(config) != spec.graph.n or any(not 0 <= c < spec.k for c in config):
            return False
        return _nonrep_ok(spec.graph, config, spec.L_max)
    if isinstance(spec, FacialThueSpec):
        if len(config) != len(spec.graph.edges) or any(not 0 <= c < spec.k for c in config):
            return False
        colors = [spec.lists[e][c] for e, c in enumerate(config)]
        for face in spec.faces.faces:
            ring = [spec.graph.edge_id(a, b) for a, b in zip(face, face[1:] + face[:1])]
            for n in range(1, spec.L_max + 1):
                if 2 * n > len(ring):
                    break
                for i in range(len(ring)):
                    window = [colors[ring[(i + j) % len(ring)]] for j in range(2 * n)]
                    if _repetitive(window):
                        return False
        return True
    if isinstance(spec, FrugalSpec):
        g = spec.graph
        if len(config) != g.n or any(not 0 <= c < spec.k for c in config):
            return False
        if any(config[u] == config[v] for u, v in g.edges):
            return False
        for v in range(g.n):
            counts = Counter(config[u] for u in g.adj[v])
            if counts and max(counts.values()) > spec.beta:
                return False
        return True
    raise TypeError(f"unknown spec type {type(spec).__name__}")


def build_instance(spec) -> Instance:
    if isinstance(spec, NonrepetitiveSpec):
        return build_nonrepetitive_instance(spec)
    if isinstance(spec, FacialThueSpec):
        return build_facial_thue_instance(spec)
    if isinstance(spec, FrugalSpec):
        return build_frugal_instance(spec)
    raise TypeError(f"unknown spec type {type(spec).__name__}")


def spec_max_degree(spec) -> int:
    return max_degree(spec.graph)
