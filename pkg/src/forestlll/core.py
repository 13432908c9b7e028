"""Atoms, domains, tempered events with seeds, and problem instances.

Atoms are dense integers ``0..m-1`` and their total order is the integer order.
A configuration is an integer array assigning a value index to every atom; a
partial configuration may hold :data:`UNASSIGNED` entries.

Events come in a few kinds that share one interface:

* :class:`ElementaryEvent` -- a single forbidden configuration of the support.
* :class:`RepetitionEvent` -- the support, read as a sequence ``v1..v2n``, is
  colored repetitively (``c(v_i) == c(v_{i+n})``).
* :class:`MonochromaticEvent` -- every atom of the support gets the same color.
* :class:`TableEvent` -- an explicit set of configurations of the support.
* :class:`PredicateEvent` -- an arbitrary callable; not serializable.

When an instance carries ``labels`` (per-atom lists of colors, as in list
coloring), repetition and monochromatic events compare colors, not value
indices.
"""
from __future__ import annotations

import configparser
import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, ClassVar, Iterable, Sequence

import networkx as nx
import numpy as np

UNASSIGNED = -1

#: Largest support product for which probabilities are computed by enumeration.
ENUMERATION_CAP = 1 << 20


class PartialConfigurationError(ValueError):
    """An event was evaluated on a configuration leaving its support unassigned."""


class InstanceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """Value domain ``0..size-1`` with uniform or explicit weights."""

    size: int
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"domain size must be >= 1, got {self.size}")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != self.size:
                raise ValueError("weights length must equal domain size")
            if min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
                raise ValueError("weights must be nonnegative and sum to 1")
            object.__setattr__(self, "weights", w)

    @property
    def uniform(self) -> bool:
        return self.weights is None

    def prob(self, value: int):
        if self.weights is None:
            return Fraction(1, self.size)
        return self.weights[value]


# --------------------------------------------------------------------------- events


@dataclass(frozen=True)
class Event:
    """Base class. ``support`` is ordered; its set view is ``atoms``."""

    support: tuple[int, ...]
    id: int = -1

    kind: ClassVar[str] = "abstract"

    def __post_init__(self):
        sup = tuple(int(x) for x in self.support)
        if not sup:
            raise ValueError("event support must be nonempty")
        if len(set(sup)) != len(sup):
            raise ValueError(f"event support has repeated atoms: {sup}")
        object.__setattr__(self, "support", sup)

    @property
    def atoms(self) -> frozenset[int]:
        return frozenset(self.support)

    # subclasses override the following
    @property
    def kappa(self) -> int:
        return 0

    @property
    def tidy(self) -> bool:
        return False

    def seed_for(self, atom: int) -> frozenset[int]:
        self._require_member(atom)
        return frozenset()

    def occurs_values(self, values, labels=None) -> bool:
        raise NotImplementedError

    def count_weight(self, domains: Sequence[Domain], labels=None):
        """Probability mass of the event under independent sampling."""
        raise NotImplementedError

    def params(self) -> str:
        return ""

    # shared
    @property
    def power(self) -> int:
        return len(self.support) - self.kappa if self.tidy else len(self.support)

    def _require_member(self, atom: int):
        if atom not in self.atoms:
            raise ValueError(f"atom {atom} is not in the support of event {self.id}")

    def region(self, atom: int) -> tuple[int, ...]:
        """Atoms resampled by ``Resample(atom, self)``: support minus the seed, sorted."""
        seed = self.seed_for(atom)
        return tuple(sorted(y for y in self.support if y not in seed))


def _color(labels, atom, value):
    return value if labels is None else labels[atom][value]


def _label_set(labels, domains, atom):
    if labels is None:
        return range(domains[atom].size)
    return labels[atom]


@dataclass(frozen=True)
class ElementaryEvent(Event):
    values: tuple[int, ...] = ()

    kind: ClassVar[str] = "elementary"

    def __post_init__(self):
        super().__post_init__()
        vals = tuple(int(v) for v in self.values)
        if len(vals) != len(self.support):
            raise ValueError("elementary event needs one value per support atom")
        object.__setattr__(self, "values", vals)

    @property
    def tidy(self) -> bool:
        return True

    def occurs_values(self, values, labels=None) -> bool:
        for x, v in zip(self.support, self.values):
            if values[x] != v:
                return False
        return True

    def count_weight(self, domains, labels=None):
        p = Fraction(1) if all(domains[x].uniform for x in self.support) else 1.0
        for x, v in zip(self.support, self.values):
            if not 0 <= v < domains[x].size:
                return 0 * p
            p = p * domains[x].prob(v)
        return p

    def params(self) -> str:
        return "values=" + " ".join(map(str, self.values))


@dataclass(frozen=True)
class RepetitionEvent(Event):
    """``support = (v1..v2n)`` colored so that ``c(v_i) == c(v_{i+n})`` for all i.

    The seed avoiding ``x`` is the half of the sequence not containing ``x``.
    """

    kind: ClassVar[str] = "repetition"

    def __post_init__(self):
        super().__post_init__()
        if len(self.support) % 2:
            raise ValueError("repetition events need an even support")

    @property
    def half(self) -> int:
        return len(self.support) // 2

    @property
    def kappa(self) -> int:
        return self.half

    @property
    def tidy(self) -> bool:
        return True

    def seed_for(self, atom: int) -> frozenset[int]:
        self._require_member(atom)
        n = self.half
        first = self.support[:n]
        return frozenset(self.support[n:]) if atom in first else frozenset(first)

    def occurs_values(self, values, labels=None) -> bool:
        n = self.half
        s = self.support
        if labels is None:
            for i in range(n):
                if values[s[i]] != values[s[i + n]]:
                    return False
        else:
            for i in range(n):
                a, b = s[i], s[i + n]
                if labels[a][values[a]] != labels[b][values[b]]:
                    return False
        return True

    def count_weight(self, domains, labels=None):
        n = self.half
        s = self.support
        p = Fraction(1) if all(domains[x].uniform for x in s) else 1.0
        for i in range(n):
            a, b = s[i], s[i + n]
            pair = 0 * p
            for va in range(domains[a].size):
                ca = _color(labels, a, va)
                for vb in range(domains[b].size):
                    if _color(labels, b, vb) == ca:
                        pair += domains[a].prob(va) * domains[b].prob(vb)
            p = p * pair
        return p


@dataclass(frozen=True)
class MonochromaticEvent(Event):
    """All support atoms receive the same color; seeds are singletons."""

    kind: ClassVar[str] = "monochromatic"

    def __post_init__(self):
        super().__post_init__()
        if len(self.support) < 2:
            raise ValueError("monochromatic events need at least two atoms")

    @property
    def kappa(self) -> int:
        return 1

    @property
    def tidy(self) -> bool:
        return True

    def seed_for(self, atom: int) -> frozenset[int]:
        self._require_member(atom)
        return frozenset((min(y for y in self.support if y != atom),))

    def occurs_values(self, values, labels=None) -> bool:
        s = self.support
        if labels is None:
            c = values[s[0]]
            return all(values[y] == c for y in s[1:])
        c = labels[s[0]][values[s[0]]]
        return all(labels[y][values[y]] == c for y in s[1:])

    def count_weight(self, domains, labels=None):
        s = self.support
        exact = all(domains[x].uniform for x in s)
        total = Fraction(0) if exact else 0.0
        colors = set(_label_set(labels, domains, s[0]))
        for c in sorted(colors):
            term = Fraction(1) if exact else 1.0
            for x in s:
                mass = 0 * term
                for v in range(domains[x].size):
                    if _color(labels, x, v) == c:
                        mass += domains[x].prob(v)
                term = term * mass
                if term == 0:
                    break
            total += term
        return total


def _canonical_table_seeds(support, configs, sizes):
    """Seeds per the uniform-setting definition, enumerated on value indices.

    Returns ``(kappa, {atom: seed})`` or ``None`` when the table is not tidy.
    """
    n_conf = len(configs)
    if n_conf == 1:
        return 0, {}
    pos = {x: i for i, x in enumerate(support)}
    seeds: list[tuple[int, ...]] = []
    for r in range(1, len(support)):
        for combo in itertools.combinations(sorted(support), r):
            if math.prod(sizes[x] for x in combo) != n_conf:
                continue
            proj = {tuple(c[pos[x]] for x in combo) for c in configs}
            if len(proj) == n_conf:
                seeds.append(combo)
    if not seeds or len({len(s) for s in seeds}) != 1:
        return None
    chosen = {}
    for x in support:
        cands = [s for s in seeds if x not in s]
        if not cands:
            return None
        chosen[x] = frozenset(min(cands))
    return len(seeds[0]), chosen


@dataclass(frozen=True)
class TableEvent(Event):
    """Explicit set of configurations (value-index tuples aligned with ``support``)."""

    configs: frozenset[tuple[int, ...]] = frozenset()
    sizes: tuple[int, ...] = ()
    _seeds: dict = field(default=None, compare=False, repr=False)

    kind: ClassVar[str] = "table"

    def __post_init__(self):
        super().__post_init__()
        confs = frozenset(tuple(int(v) for v in c) for c in self.configs)
        if not confs:
            raise ValueError("table event needs at least one configuration")
        if any(len(c) != len(self.support) for c in confs):
            raise ValueError("table configuration length differs from support")
        object.__setattr__(self, "configs", confs)
        if self.sizes:
            if len(self.sizes) != len(self.support):
                raise ValueError("sizes must align with support")
            sizes = dict(zip(self.support, self.sizes))
            if len(self.support) > 20:
                raise ValueError("table events are limited to supports of size 20")
            object.__setattr__(self, "_seeds", _canonical_table_seeds(self.support, confs, sizes))

    @property
    def tidy(self) -> bool:
        return self._seeds is not None

    @property
    def kappa(self) -> int:
        return self._seeds[0] if self._seeds else 0

    def seed_for(self, atom: int) -> frozenset[int]:
        self._require_member(atom)
        if not self._seeds:
            return frozenset()
        return self._seeds[1].get(atom, frozenset())

    def occurs_values(self, values, labels=None) -> bool:
        return tuple(values[x] for x in self.support) in self.configs

    def count_weight(self, domains, labels=None):
        exact = all(domains[x].uniform for x in self.support)
        total = Fraction(0) if exact else 0.0
        for c in self.configs:
            term = Fraction(1) if exact else 1.0
            for x, v in zip(self.support, c):
                term = term * (domains[x].prob(v) if 0 <= v < domains[x].size else 0)
            total += term
        return total

    def params(self) -> str:
        rows = sorted(self.configs)
        return "configs=" + ";".join(",".join(map(str, r)) for r in rows)


@dataclass(frozen=True)
class PredicateEvent(Event):
    """Callable-backed event. ``predicate`` receives the support's values as a tuple.

    ``seeds`` optionally maps each support atom to its seed; all seeds must have
    the same size. Without seeds the event is treated as not tidy.
    """

    predicate: Callable[[tuple[int, ...]], bool] | None = field(default=None, compare=False)
    probability: object = None
    seeds: dict | None = field(default=None, compare=False)

    kind: ClassVar[str] = "predicate"

    def __post_init__(self):
        super().__post_init__()
        if self.predicate is None:
            raise ValueError("predicate event needs a predicate")
        if self.seeds is not None:
            seeds = {int(x): frozenset(s) for x, s in self.seeds.items()}
            if set(seeds) != set(self.support):
                raise ValueError("seeds must be given for every support atom")
            if len({len(s) for s in seeds.values()}) != 1:
                raise ValueError("all seeds must share one size")
            for x, s in seeds.items():
                if x in s or not s <= set(self.support):
                    raise ValueError(f"invalid seed {sorted(s)} for atom {x}")
            object.__setattr__(self, "seeds", seeds)

    @property
    def tidy(self) -> bool:
        return self.seeds is not None

    @property
    def kappa(self) -> int:
        return len(next(iter(self.seeds.values()))) if self.seeds else 0

    def seed_for(self, atom: int) -> frozenset[int]:
        self._require_member(atom)
        return self.seeds[atom] if self.seeds else frozenset()

    def occurs_values(self, values, labels=None) -> bool:
        return bool(self.predicate(tuple(values[x] for x in self.support)))

    def count_weight(self, domains, labels=None):
        if self.probability is not None:
            return self.probability
        sizes = [domains[x].size for x in self.support]
        if math.prod(sizes) > ENUMERATION_CAP:
            raise ValueError(
                f"event {self.id}: support too large to enumerate; supply a probability"
            )
        exact = all(domains[x].uniform for x in self.support)
        total = Fraction(0) if exact else 0.0
        for vals in itertools.product(*(range(k) for k in sizes)):
            if self.predicate(vals):
                term = Fraction(1) if exact else 1.0
                for x, v in zip(self.support, vals):
                    term = term * domains[x].prob(v)
                total += term
        return total


EVENT_KINDS = {
    cls.kind: cls for cls in (ElementaryEvent, RepetitionEvent, MonochromaticEvent, TableEvent)
}


# --------------------------------------------------------------------------- instance


class Instance:
    """Atoms with domains plus an ordered family of tempered events.

    Events are re-identified densely in the given order. ``labels``, when given,
    is a per-atom sequence of distinct colors: value index ``v`` of atom ``x``
    means color ``labels[x][v]``.
    """

    def __init__(self, domains: Sequence[Domain], events: Iterable[Event], labels=None):
        self.domains: tuple[Domain, ...] = tuple(domains)
        if not self.domains:
            raise ValueError("an instance needs at least one atom")
        m = len(self.domains)
        evs = []
        for i, ev in enumerate(events):
            ev = replace(ev, id=i) if not isinstance(ev, TableEvent) else _retable(ev, i, self.domains)
            if not all(0 <= x < m for x in ev.support):
                raise ValueError(f"event {i} has support outside 0..{m - 1}")
            evs.append(ev)
        self.events: tuple[Event, ...] = tuple(evs)
        if labels is not None:
            labels = tuple(tuple(int(c) for c in row) for row in labels)
            if len(labels) != m:
                raise ValueError("labels need one row per atom")
            for x, row in enumerate(labels):
                if len(row) != self.domains[x].size or len(set(row)) != len(row):
                    raise ValueError(f"labels of atom {x} must be distinct, one per value")
        self.labels = labels
        inc: list[list[int]] = [[] for _ in range(m)]
        for ev in self.events:
            for x in ev.support:
                inc[x].append(ev.id)
        self.incidence: tuple[tuple[int, ...], ...] = tuple(tuple(r) for r in inc)
        self.sizes = np.array([d.size for d in self.domains], dtype=np.int64)
        self._regions: dict[tuple[int, int], tuple[int, ...]] = {}
        self._groups = None

    @classmethod
    def uniform(cls, m: int, k: int, events: Iterable[Event], labels=None) -> "Instance":
        return cls([Domain(k)] * m, events, labels=labels)

    @property
    def m(self) -> int:
        return len(self.domains)

    @property
    def is_uniform(self) -> bool:
        """Common domain size and uniform distribution on every atom."""
        return all(d.uniform for d in self.domains) and len({d.size for d in self.domains}) == 1

    @property
    def k(self) -> int | None:
        return self.domains[0].size if self.is_uniform else None

    def events_containing(self, atom: int) -> tuple[int, ...]:
        return self.incidence[atom]

    def region(self, eid: int, atom: int) -> tuple[int, ...]:
        key = (eid, atom)
        r = self._regions.get(key)
        if r is None:
            r = self._regions[key] = self.events[eid].region(atom)
        return r

    # -- sampling and evaluation
    def sample(self, rng: np.random.Generator, atoms=None, out=None) -> np.ndarray:
        """Fresh sample of ``atoms`` (all atoms by default), written into ``out``."""
        if out is None:
            out = np.empty(self.m, dtype=np.int64)
        idx = np.arange(self.m) if atoms is None else np.asarray(atoms, dtype=np.int64)
        if all(self.domains[x].uniform for x in idx):
            out[idx] = rng.integers(0, self.sizes[idx])
        else:
            for x in idx:
                d = self.domains[x]
                out[x] = rng.integers(d.size) if d.uniform else rng.choice(d.size, p=d.weights)
        return out

    def occurs(self, eid: int, config) -> bool:
        ev = self.events[eid]
        return occurs(ev, config, self.labels)

    def occurring_mask(self, config) -> np.ndarray:
        """Boolean mask over events; unassigned supports never occur."""
        config = np.asarray(config, dtype=np.int64)
        if self._groups is None:
            self._groups = _compile_groups(self)
        mask = np.zeros(len(self.events), dtype=bool)
        if not len(self.events):
            return mask
        assigned = config >= 0
        safe = np.where(assigned, config, 0)
        colors = safe if self.labels is None else self._label_array[np.arange(self.m), safe]
        for kind, ids, arrs in self._groups:
            if kind == "repetition":
                a, b = arrs
                hit = (colors[a] == colors[b]).all(axis=1) & assigned[a].all(axis=1) & assigned[b].all(axis=1)
            elif kind == "monochromatic":
                (s,) = arrs
                hit = (colors[s] == colors[s[:, :1]]).all(axis=1) & assigned[s].all(axis=1)
            elif kind == "elementary":
                s, vals = arrs
                hit = (config[s] == vals).all(axis=1)
            else:
                hit = np.array(
                    [
                        bool(assigned[list(self.events[i].support)].all())
                        and self.events[i].occurs_values(config, self.labels)
                        for i in ids
                    ],
                    dtype=bool,
                )
            mask[ids] = hit
        return mask

    @property
    def _label_array(self) -> np.ndarray:
        arr = getattr(self, "_labels_np", None)
        if arr is None:
            width = int(self.sizes.max())
            arr = np.full((self.m, width), -1, dtype=np.int64)
            for x, row in enumerate(self.labels):
                arr[x, : len(row)] = row
            self._labels_np = arr
        return arr

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.domains == other.domains
            and self.labels == other.labels
            and len(self.events) == len(other.events)
            and all(
                type(a) is type(b) and a.support == b.support and a.params() == b.params()
                for a, b in zip(self.events, other.events)
            )
        )

    def __repr__(self):
        return f"Instance(m={self.m}, events={len(self.events)}, uniform={self.is_uniform})"


def _retable(ev: TableEvent, i: int, domains) -> TableEvent:
    sizes = tuple(domains[x].size for x in ev.support) if max(ev.support) < len(domains) else ()
    return TableEvent(support=ev.support, id=i, configs=ev.configs, sizes=sizes)


def _compile_groups(inst: Instance):
    buckets: dict[tuple, list[int]] = {}
    for ev in inst.events:
        if isinstance(ev, RepetitionEvent):
            key = ("repetition", len(ev.support))
        elif isinstance(ev, MonochromaticEvent):
            key = ("monochromatic", len(ev.support))
        elif isinstance(ev, ElementaryEvent):
            key = ("elementary", len(ev.support))
        else:
            key = ("other", 0)
        buckets.setdefault(key, []).append(ev.id)
    groups = []
    for (kind, size), ids in sorted(buckets.items()):
        idx = np.array(ids, dtype=np.int64)
        if kind == "other":
            groups.append((kind, idx, ()))
            continue
        sup = np.array([inst.events[i].support for i in ids], dtype=np.int64)
        if kind == "repetition":
            arrs = (sup[:, : size // 2], sup[:, size // 2 :])
        elif kind == "monochromatic":
            arrs = (sup,)
        else:
            arrs = (sup, np.array([inst.events[i].values for i in ids], dtype=np.int64))
        groups.append((kind, idx, arrs))
    return groups


# --------------------------------------------------------------------------- operations


def occurs(event: Event, config, labels=None) -> bool:
    """True iff the restriction of ``config`` to the event's support lies in the event."""
    for x in event.support:
        if config[x] == UNASSIGNED:
            raise PartialConfigurationError(
                f"partial configuration: atom {x} of event {event.id} is unassigned"
            )
    return event.occurs_values(config, labels)


def power(event: Event) -> int:
    return event.power


def seed_for(event: Event, atom: int) -> frozenset[int]:
    return event.seed_for(atom)


def event_probability(event: Event, instance: Instance):
    """Exact probability: a ``Fraction`` on uniform supports, a float otherwise."""
    return event.count_weight(instance.domains, instance.labels)


def natural_dependency_graph(instance: Instance) -> nx.Graph:
    """Events as nodes; an edge joins two events whose supports intersect."""
    g = nx.Graph()
    g.add_nodes_from(range(len(instance.events)))
    for ids in instance.incidence:
        g.add_edges_from(itertools.combinations(ids, 2))
    return g


# --------------------------------------------------------------------------- serialization

_HEADER = "# forestlll instance v1"


def dumps_instance(instance: Instance) -> str:
    """Sectioned text: ``[atoms]``, ``[domains]``, optional ``[labels]``, ``[events]``."""
    lines = [_HEADER, "[atoms]", f"count = {instance.m}", "", "[domains]"]
    sizes = {d.size for d in instance.domains}
    if instance.is_uniform:
        lines.append(f"size = {sizes.pop()}")
    else:
        lines.append("sizes = " + " ".join(str(d.size) for d in instance.domains))
        for x, d in enumerate(instance.domains):
            if d.weights is not None:
                lines.append(f"weights.{x} = " + " ".join(repr(w) for w in d.weights))
    if instance.labels is not None:
        lines += ["", "[labels]"]
        lines += [f"{x} = " + " ".join(map(str, row)) for x, row in enumerate(instance.labels)]
    lines += ["", "[events]"]
    for ev in instance.events:
        if ev.kind not in EVENT_KINDS:
            raise InstanceFormatError(f"event kind {ev.kind!r} cannot be serialized")
        parts = [ev.kind, " ".join(map(str, ev.support))]
        if ev.params():
            parts.append(ev.params())
        lines.append(f"{ev.id} = " + " | ".join(parts))
    return "\n".join(lines) + "\n"


def loads_instance(text: str) -> Instance:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
        m = cp.getint("atoms", "count")
        dom = cp["domains"]
        if "size" in dom:
            domains = [Domain(int(dom["size"]))] * m
        else:
            sizes = [int(s) for s in dom["sizes"].split()]
            if len(sizes) != m:
                raise InstanceFormatError("sizes must list one size per atom")
            domains = []
            for x, k in enumerate(sizes):
                w = dom.get(f"weights.{x}")
                domains.append(Domain(k, tuple(float(v) for v in w.split()) if w else None))
        labels = None
        if cp.has_section("labels"):
            labels = [[int(c) for c in cp["labels"][str(x)].split()] for x in range(m)]
        events = []
        items = sorted(cp["events"].items(), key=lambda kv: int(kv[0])) if cp.has_section("events") else []
        for i, (key, val) in enumerate(items):
            if int(key) != i:
                raise InstanceFormatError("event ids must be dense 0..n-1")
            events.append(_parse_event(val))
    except (configparser.Error, KeyError) as exc:
        raise InstanceFormatError(str(exc)) from exc
    return Instance(domains, events, labels=labels)


def _parse_event(val: str) -> Event:
    parts = [p.strip() for p in val.split("|")]
    kind, support = parts[0], tuple(int(x) for x in parts[1].split())
    params = dict(p.split("=", 1) for p in parts[2:])
    if kind not in EVENT_KINDS:
        raise InstanceFormatError(f"unknown event kind {kind!r}")
    if kind == "elementary":
        return ElementaryEvent(support, values=tuple(int(v) for v in params["values"].split()))
    if kind == "table":
        rows = [tuple(int(v) for v in r.split(",")) for r in params["configs"].split(";")]
        return TableEvent(support, configs=frozenset(rows))
    return EVENT_KINDS[kind](support)


def write_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_instance(instance))


def read_instance(path) -> Instance:
    with open(path) as fh:
        return loads_instance(fh.read())
