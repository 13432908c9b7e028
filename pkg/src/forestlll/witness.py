"""Witness forests of forest-algorithm runs and the counting machinery behind them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Instance
from .criteria import PowerSpectrum, min_ratio
from .solvers import Record

#: Above this length ``q_sequence`` switches to rescaled (log-space) evaluation.
LOG_SPACE_FROM = 200


class ForestIntegrityError(ValueError):
    """A record cannot be turned into a forest (no ancestor accepts a step)."""


@dataclass
class Node:
    atom: int
    event: int | None = None
    children: list["Node"] = field(default_factory=list)

    @property
    def internal(self) -> bool:
        return self.event is not None

    def preorder(self):
        stack = [self]
        while stack:
            v = stack.pop()
            yield v
            stack.extend(reversed(v.children))


@dataclass
class WitnessForest:
    trees: list[Node]

    def internal_labels(self) -> list[list[tuple[int, int]]]:
        """Depth-first internal labels of each tree."""
        return [[(v.atom, v.event) for v in t.preorder() if v.internal] for t in self.trees]

    @property
    def internal_count(self) -> int:
        return sum(len(x) for x in self.internal_labels())

    def dumps(self) -> str:
        """Indented text dump, two spaces per level; leaves print ``(x, -)``."""
        lines = []
        for t in self.trees:
            stack = [(t, 0)]
            while stack:
                v, depth = stack.pop()
                ev = "-" if v.event is None else str(v.event)
                lines.append(f"{'  ' * depth}({v.atom}, {ev})")
                stack.extend((c, depth + 1) for c in reversed(v.children))
        return "\n".join(lines) + "\n"


def _phase_tree(phase: Sequence[tuple[int, int]], instance: Instance) -> Node:
    x0, e0 = phase[0]
    root = Node(x0, e0)
    path = [root]
    for x, e in phase[1:]:
        while path and x not in instance.region(path[-1].event, path[-1].atom):
            path.pop()
        if not path:
            raise ForestIntegrityError(f"step ({x}, {e}) attaches to no ancestor in its phase")
        node = Node(x, e)
        path[-1].children.append(node)
        path.append(node)
    return root


def build_forest(record: Record, instance: Instance) -> WitnessForest:
    """Per-phase trees by ancestor attachment, padded to ``m`` trees and full arity."""
    for x, e in record.steps:
        if not 0 <= e < len(instance.events) or x not in instance.events[e].atoms:
            raise ForestIntegrityError(f"step ({x}, {e}) is not admissible for this instance")
    trees = [_phase_tree(ph, instance) for ph in record.phases() if ph]
    for t in trees:
        for v in list(t.preorder()):
            if v.internal:
                have = {c.atom for c in v.children}
                for y in instance.region(v.event, v.atom):
                    if y not in have:
                        v.children.append(Node(y))
    roots = {t.atom for t in trees}
    trees += [Node(x) for x in range(instance.m) if x not in roots]
    trees.sort(key=lambda t: t.atom)
    return WitnessForest(trees)


@dataclass
class PropertyVerdict:
    violations: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def failed(self) -> set[int]:
        return {p for p, _ in self.violations}


def check_properties(forest: WitnessForest, instance: Instance) -> PropertyVerdict:
    """Check the five structural properties of a witness forest."""
    out = PropertyVerdict()
    bad = out.violations.append
    if len(forest.trees) != instance.m:
        bad((1, f"{len(forest.trees)} trees, expected {instance.m}"))
    roots = [t.atom for t in forest.trees]
    if len(set(roots)) != len(roots):
        bad((1, "root atoms are not distinct"))
    for t in forest.trees:
        for v in t.preorder():
            if v.internal:
                ev = instance.events[v.event]
                if v.atom not in ev.atoms:
                    bad((3, f"internal ({v.atom}, {v.event}): atom outside support"))
                if len(v.children) != ev.power:
                    bad((5, f"({v.atom}, {v.event}) has {len(v.children)} children, power {ev.power}"))
                atoms = [c.atom for c in v.children]
                if len(set(atoms)) != len(atoms):
                    bad((4, f"({v.atom}, {v.event}) has repeated sibling atoms"))
                for c in v.children:
                    if c.atom not in ev.atoms:
                        bad((2, f"child {c.atom} of ({v.atom}, {v.event}) outside parent support"))
                        if not c.internal:
                            bad((3, f"leaf ({c.atom}, -) outside parent support"))
            elif v.children:
                bad((3, f"vertex ({v.atom}, -) has children"))
    return out


@dataclass
class InjectivityVerdict:
    injective: bool
    records: int
    collisions: list[tuple[int, int]] = field(default_factory=list)


def injectivity_probe(records: Iterable[Record], instance: Instance) -> InjectivityVerdict:
    """Distinct records must give distinct forests (compared by their text dump)."""
    seen: dict[str, tuple[tuple, int]] = {}
    collisions = []
    n = 0
    for i, rec in enumerate(records):
        n += 1
        key = (tuple(rec.steps), tuple(rec.phase_starts))
        dump = build_forest(rec, instance).dumps()
        prev = seen.get(dump)
        if prev is None:
            seen[dump] = (key, i)
        elif prev[0] != key:
            collisions.append((prev[1], i))
    return InjectivityVerdict(not collisions, n, collisions)


@dataclass(frozen=True)
class UnlabeledForest:
    """Plane-tree shapes, each stored as its preorder sequence of child counts.

    The flat encoding determines an ordered tree uniquely and keeps hashing and
    comparison non-recursive for deep trees.
    """

    trees: tuple[tuple[int, ...], ...]

    def child_counts(self) -> list[int]:
        """Child counts of the internal vertices, in preorder."""
        return [c for t in self.trees for c in t if c]

    @property
    def internal_count(self) -> int:
        return len(self.child_counts())


def strip_labels(forest: WitnessForest) -> UnlabeledForest:
    return UnlabeledForest(tuple(tuple(len(v.children) for v in t.preorder()) for t in forest.trees))


# --------------------------------------------------------------------------- S-Check


def s_check(sequence: Sequence[tuple[int, int]], instance: Instance, rng: np.random.Generator) -> bool:
    """Sample everything, then for each ``(x, e)``: fail unless ``e`` occurs, else redraw ``supp(e) - S_x(e)``."""
    for x, e in sequence:
        if x not in instance.events[e].atoms:
            raise ValueError(f"sequence not admissible: atom {x} outside event {e}")
    cfg = instance.sample(rng)
    for x, e in sequence:
        if not instance.events[e].occurs_values(cfg, instance.labels):
            return False
        instance.sample(rng, atoms=instance.region(e, x), out=cfg)
    return True


# --------------------------------------------------------------------------- counting oracle


def q_sequence(weights: Mapping[int, object], n_max: int) -> list:
    """``Q_0..Q_{n_max}`` from ``Q_n = sum_s w_s [z^{n-1}] Q(z)^s``, ``Q_0 = 1``.

    Exact when the weights are ``Fraction``/``int``. Float weights with
    ``n_max > 200`` are evaluated rescaled; use :func:`log_q_sequence` there to
    avoid underflow in the returned values.
    """
    w = {int(s): v for s, v in weights.items() if v}
    exact = all(isinstance(v, (int, Fraction)) for v in w.values())
    if not exact and n_max > LOG_SPACE_FROM:
        return [math.exp(v) if v > -math.inf else 0.0 for v in log_q_sequence(weights, n_max)]
    return _q_direct(w, n_max, Fraction(1) if exact else 1.0)


def _q_direct(w: Mapping[int, object], n_max: int, one):
    zero = one - one
    smax = max(w, default=0)
    q = [one]
    # powers[s][j] = [z^j] Q(z)^s ; powers[0] = 1
    powers = [[one]] + [[] for _ in range(smax)]
    for n in range(1, n_max + 1):
        j = n - 1
        if j > 0:
            powers[0].append(zero)
        for s in range(1, smax + 1):
            prev = powers[s - 1]
            powers[s].append(sum((q[i] * prev[j - i] for i in range(j + 1)), zero))
        q.append(sum((ws * powers[s][j] for s, ws in w.items()), zero))
    return q


def q_n(weights: Mapping[int, object], n: int):
    return q_sequence(weights, n)[n]


def log_q_sequence(weights: Mapping[int, float], n_max: int) -> np.ndarray:
    """``log Q_n`` for ``n = 0..n_max`` via ``Q_n = lam^n Q~_n`` with weights ``w/lam``."""
    w = {int(s): float(v) for s, v in weights.items() if v}
    if not w:
        out = np.full(n_max + 1, -np.inf)
        out[0] = 0.0
        return out
    lam = min_ratio(PowerSpectrum.from_weights(w)).rho
    scaled = _q_direct({s: v / lam for s, v in w.items()}, n_max, 1.0)
    with np.errstate(divide="ignore"):
        return np.log(np.array(scaled)) + np.arange(n_max + 1) * math.log(lam)


@dataclass(frozen=True)
class RhoBoundVerdict:
    ok: bool
    rho: float
    worst_ratio: float
    n_max: int


def rho_bound_check(spectrum: PowerSpectrum | Mapping[int, float], n_max: int,
                    rtol: float = 1e-9) -> RhoBoundVerdict:
    """Check ``Q_n <= rho^n (1 + rtol)`` for ``n = 0..n_max`` with ``rho = min phi/xi``."""
    if not isinstance(spectrum, PowerSpectrum):
        spectrum = PowerSpectrum.from_weights(spectrum)
    if spectrum.tail is not None:
        raise ValueError("rho_bound_check needs a finite spectrum")
    w = {s: v for s, v in spectrum.weights.items() if v}
    if not w:
        return RhoBoundVerdict(True, 0.0, 0.0, n_max)
    rho = min_ratio(spectrum).rho
    logs = log_q_sequence(w, n_max)
    excess = logs - np.arange(n_max + 1) * math.log(rho)
    worst = float(np.exp(excess.max()))
    return RhoBoundVerdict(bool(worst <= 1 + rtol), rho, worst, n_max)
