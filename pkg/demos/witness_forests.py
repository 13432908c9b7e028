"""A run of the forest algorithm, its witness forest, and the counting bound.

Small enough to read by eye: a 5-cycle with repetition events on 2- and 4-vertex
paths and only 4 colors (the fewest that work on C5), so runs are long enough to have several phases.

Run: python demos/witness_forests.py
"""
import collections

from forestlll.applications import NonrepetitiveSpec, build_nonrepetitive_instance
from forestlll.criteria import min_ratio, spectrum_from_instance
from forestlll.graph import SimpleGraph
from forestlll.solvers import forest_algorithm, trial_rng
from forestlll.witness import build_forest, check_properties, q_sequence, strip_labels

spec = NonrepetitiveSpec(SimpleGraph.cycle(5), 4, 2)
inst = build_nonrepetitive_instance(spec)
print(f"{inst.m} atoms, {len(inst.events)} events")
for e in inst.events:
    print(f"  event {e.id}: support {e.support}, power {e.power}")

# %% one run, printed as a record and as a forest
for t in range(100):
    cfg, rec, stats = forest_algorithm(inst, trial_rng(5, t)[0])
    if len(rec.phase_starts) >= 2 and len(rec.steps) >= 4:
        break
print(f"\ntrial {t}: {len(rec.steps)} steps in {len(rec.phase_starts)} phases, final coloring {[int(v) for v in cfg]}")
print(rec.dumps())
forest = build_forest(rec, inst)
print(forest.dumps())
verdict = check_properties(forest, inst)
print("structural properties:", "all hold" if verdict.ok else verdict.violations)
print("child counts of internal vertices:", strip_labels(forest).child_counts())

# %% run lengths against the counting sequence, with enough colors for rho < 1
inst = build_nonrepetitive_instance(NonrepetitiveSpec(SimpleGraph.cycle(5), 12, 2))
spectrum = spectrum_from_instance(inst)
r = min_ratio(spectrum)
weights = {s: d * p for s, (p, d) in spectrum.terms.items()}
q = q_sequence(weights, 12)
lengths = collections.Counter(
    len(forest_algorithm(inst, trial_rng(6, t)[0])[1].steps) for t in range(20_000)
)
print(f"\nrho = {r.rho:.4f}")
print(f"{'n':>3} {'P(len >= n)':>12} {'Q_n':>12} {'rho^n':>12}")
total = sum(lengths.values())
for n in range(0, 9):
    tail = sum(c for length, c in lengths.items() if length >= n) / total
    print(f"{n:>3} {tail:>12.5f} {q[n]:>12.5f} {r.rho ** n:>12.5f}")
print("P(len >= n) is bounded by sums of Q terms over the m trees, so Q_n and rho^n set the decay rate")
