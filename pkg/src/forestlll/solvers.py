"""Constructive algorithms: plain resampling, the forest algorithm, entropy compression.

Every solver draws from a ``numpy.random.Generator``. :func:`trial_rng`
derives an independent stream per trial from ``(master_seed, trial)`` so that
trials can run in any order or in parallel.
"""
from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import numpy as np

from .core import UNASSIGNED, Instance

DEFAULT_STEP_CAP = 10**6


def trial_seed(master_seed: int, trial: int) -> int:
    """64-bit seed of trial ``trial`` under ``master_seed``."""
    ss = np.random.SeedSequence([int(master_seed), int(trial)])
    return int(ss.generate_state(1, np.uint64)[0])


def trial_rng(master_seed: int, trial: int) -> tuple[np.random.Generator, int]:
    seed = trial_seed(master_seed, trial)
    return np.random.default_rng(seed), seed


@dataclass
class Record:
    """Ordered ``(atom, event)`` steps with the indices where phases begin."""

    steps: list[tuple[int, int]] = field(default_factory=list)
    phase_starts: list[int] = field(default_factory=list)
    rng_seed: int | None = None
    terminated: bool = False

    def phases(self) -> list[list[tuple[int, int]]]:
        bounds = self.phase_starts + [len(self.steps)]
        return [self.steps[a:b] for a, b in zip(bounds, bounds[1:])]

    def dumps(self) -> str:
        out = io.StringIO()
        out.write(f"# seed={self.rng_seed} terminated={int(self.terminated)}\n")
        out.write("# phase step atom event\n")
        starts = set(self.phase_starts)
        phase = -1
        for i, (x, e) in enumerate(self.steps):
            if i in starts:
                phase += 1
            out.write(f"{phase} {i} {x} {e}\n")
        return out.getvalue()

    @classmethod
    def loads(cls, text: str) -> "Record":
        rec = cls()
        last_phase = None
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("seed="):
                        v = tok[5:]
                        rec.rng_seed = None if v == "None" else int(v)
                    elif tok.startswith("terminated="):
                        rec.terminated = bool(int(tok[11:]))
                continue
            phase, step, atom, event = (int(v) for v in line.split())
            if step != len(rec.steps):
                raise ValueError(f"record step {step} out of order")
            if phase != last_phase:
                rec.phase_starts.append(step)
                last_phase = phase
            rec.steps.append((atom, event))
        return rec


@dataclass
class RunStats:
    steps: int
    phases: int
    wall_time: float
    config: np.ndarray
    success: bool
    lemma_violations: int = 0


class _Tracker:
    """Incremental bookkeeping of occurring events and bad atoms for a total configuration."""

    def __init__(self, instance: Instance, config: np.ndarray):
        self.inst = instance
        self.cfg = config.tolist()
        self.labels = instance.labels
        n = len(instance.events)
        mask = instance.occurring_mask(config) if n else np.zeros(0, dtype=bool)
        self.occ = bytearray(mask.astype(np.uint8).tobytes())
        self.bad_count = [0] * instance.m
        for e in np.flatnonzero(mask):
            for y in instance.events[e].support:
                self.bad_count[y] += 1
        self.bad = bytearray(1 if c else 0 for c in self.bad_count)

    def smallest_bad(self) -> int:
        return self.bad.find(1)

    def smallest_event(self, atom: int) -> int:
        occ = self.occ
        for e in self.inst.incidence[atom]:
            if occ[e]:
                return e
        return -1

    def first_bad_in(self, atoms) -> int:
        bad = self.bad
        for y in atoms:
            if bad[y]:
                return y
        return -1

    def set_values(self, atoms, values):
        cfg = self.cfg
        for y, v in zip(atoms, values):
            cfg[y] = v
        inst, occ, labels = self.inst, self.occ, self.labels
        seen = set()
        for y in atoms:
            for e in inst.incidence[y]:
                if e in seen:
                    continue
                seen.add(e)
                now = inst.events[e].occurs_values(cfg, labels)
                if now != bool(occ[e]):
                    occ[e] = now
                    delta = 1 if now else -1
                    for z in inst.events[e].support:
                        c = self.bad_count[z] + delta
                        self.bad_count[z] = c
                        self.bad[z] = 1 if c else 0

    def config(self) -> np.ndarray:
        return np.array(self.cfg, dtype=np.int64)


def _region_sampler(instance: Instance, rng: np.random.Generator):
    sizes = instance.sizes
    if all(d.uniform for d in instance.domains):
        def draw(atoms):
            return rng.integers(0, sizes[list(atoms)]).tolist()
    else:
        def draw(atoms):
            out = np.empty(instance.m, dtype=np.int64)
            instance.sample(rng, atoms=list(atoms), out=out)
            return out[list(atoms)].tolist()
    return draw


def bad_atoms(instance: Instance, config) -> frozenset[int]:
    """Atoms lying in the support of at least one occurring event."""
    mask = instance.occurring_mask(config)
    return frozenset(y for e in np.flatnonzero(mask) for y in instance.events[e].support)


def moser_tardos_resampling(instance: Instance, rng: np.random.Generator,
                            step_cap: int = DEFAULT_STEP_CAP) -> tuple[np.ndarray, RunStats]:
    """Resample the full support of the smallest occurring event until none occurs."""
    t0 = time.perf_counter()
    tr = _Tracker(instance, instance.sample(rng))
    draw = _region_sampler(instance, rng)
    steps = 0
    while True:
        e = tr.occ.find(1)
        if e < 0:
            success = True
            break
        if steps >= step_cap:
            success = False
            break
        sup = instance.events[e].support
        tr.set_values(sup, draw(sup))
        steps += 1
    cfg = tr.config()
    return cfg, RunStats(steps, 0, time.perf_counter() - t0, cfg, success)


def forest_algorithm(instance: Instance, rng: np.random.Generator,
                     step_cap: int = DEFAULT_STEP_CAP, instrument: bool = False,
                     rng_seed: int | None = None) -> tuple[np.ndarray, Record, RunStats]:
    """Seed-aware resampling recorded as phases of nested ``Resample(x, e)`` calls.

    ``Resample(x, e)`` redraws ``supp(e) - S_x(e)`` and then, while some atom of
    that set is bad, recurses on the smallest such atom and its smallest
    occurring event. The recursion runs on an explicit stack. With
    ``instrument=True`` every returning call checks that the atoms good at its
    start, together with its resampled set, are good; failures are counted in
    ``RunStats.lemma_violations``.
    """
    t0 = time.perf_counter()
    tr = _Tracker(instance, instance.sample(rng))
    draw = _region_sampler(instance, rng)
    rec = Record(rng_seed=rng_seed)
    steps = rec.steps
    violations = 0
    # frames: (region, good atoms at call start or None)
    stack: list[tuple[tuple[int, ...], frozenset | None]] = []

    def call(x: int, e: int):
        good = None
        if instrument:
            good = frozenset(i for i, b in enumerate(tr.bad) if not b)
        steps.append((x, e))
        region = instance.region(e, x)
        tr.set_values(region, draw(region))
        stack.append((region, good))

    capped = False
    while not capped:
        x = tr.smallest_bad()
        if x < 0:
            break
        if len(steps) >= step_cap:
            capped = True
            break
        rec.phase_starts.append(len(steps))
        call(x, tr.smallest_event(x))
        while stack:
            region, good = stack[-1]
            y = tr.first_bad_in(region)
            if y < 0:
                stack.pop()
                if good is not None:
                    if any(tr.bad[z] for z in good) or any(tr.bad[z] for z in region):
                        violations += 1
                continue
            if len(steps) >= step_cap:
                capped = True
                break
            call(y, tr.smallest_event(y))
    rec.terminated = not capped
    cfg = tr.config()
    stats = RunStats(len(steps), len(rec.phase_starts), time.perf_counter() - t0, cfg,
                     not capped, violations)
    return cfg, rec, stats


@dataclass
class EntropyTrace:
    """Per-step ``(atom, value, flaw)``; ``flaw`` is -1 when no flaw appeared."""

    steps: list[tuple[int, int, int]] = field(default_factory=list)
    success: bool = False
    flaw_violations: int = 0

    @property
    def used_entries(self) -> int:
        return len(self.steps)


def entropy_compression(instance: Instance, rng: np.random.Generator | None, t: int,
                        vector=None, verify: bool = False) -> tuple[np.ndarray | None, EntropyTrace]:
    """Backtracking colorer driven by the value vector ``V_t``.

    Each step colors the smallest uncolored atom with the next entry of ``V_t``;
    if flaws appear, the smallest one ``e`` (necessarily containing that atom
    ``y``) is undone by uncoloring ``supp(e) - S_y(e)``. Values are indices
    ``0..k-1``. With ``vector=None`` the entries are drawn from ``rng``.
    ``verify=True`` scans the whole family after every step and counts partial
    colorings containing an occurring flaw.
    """
    if not instance.is_uniform:
        raise ValueError("entropy compression needs a uniform instance")
    if t < 1:
        raise ValueError("t must be >= 1")
    k, m = instance.k, instance.m
    if vector is None:
        vector = rng.integers(0, k, size=t).tolist()
    else:
        vector = [int(v) for v in vector]
        if len(vector) < t or any(not 0 <= v < k for v in vector[:t]):
            raise ValueError("vector needs t entries in 0..k-1")
    w = [UNASSIGNED] * m
    uncolored = bytearray([1]) * m
    labels = instance.labels
    trace = EntropyTrace()
    for i in range(t):
        y = uncolored.find(1)
        if y < 0:
            break
        w[y] = vector[i]
        uncolored[y] = 0
        flaw = -1
        for e in instance.incidence[y]:
            ev = instance.events[e]
            if all(w[z] != UNASSIGNED for z in ev.support) and ev.occurs_values(w, labels):
                flaw = e
                break
        if flaw >= 0:
            for z in instance.region(flaw, y):
                w[z] = UNASSIGNED
                uncolored[z] = 1
        trace.steps.append((y, vector[i], flaw))
        if verify and instance.events and instance.occurring_mask(np.array(w)).any():
            trace.flaw_violations += 1
    trace.success = uncolored.find(1) < 0
    return (np.array(w, dtype=np.int64) if trace.success else None), trace
