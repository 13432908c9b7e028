"""Nonrepetitive coloring of a 6x6 grid: bounds, criteria, and solver runs.

The grid has maximum degree 4. The closed-form bound gives b0(4) = 2, hence
k = (1 + b0) * 16 = 48 colors. For the full path family this is exactly the
boundary of the ratio criterion; the truncated family used by the solvers
(paths of at most 6 vertices) is comfortably inside.

Run: python demos/nonrepetitive_grid.py
"""
import time

import numpy as np

from forestlll.applications import (
    NonrepetitiveSpec,
    build_nonrepetitive_instance,
    nonrepetitive_bounds,
    nonrepetitive_crossover,
    nonrepetitive_spectrum,
    verify_solution,
)
from forestlll.criteria import min_ratio, spectrum_from_instance, step_threshold
from forestlll.graph import SimpleGraph, d_s_exact, max_degree
from forestlll.solvers import entropy_compression, forest_algorithm, moser_tardos_resampling, trial_rng

graph = SimpleGraph.grid(6, 6)
delta = max_degree(graph)
b = nonrepetitive_bounds(delta)
print(f"delta = {delta}, b0 = {b.b0:.12f}, pi bound = {b.pi_bound:.6f}, comparison bound = {b.gmp_bound:.6f}")
print(f"comparison bound takes over from delta = {nonrepetitive_crossover()}")

k = int(np.ceil(b.pi_bound))
spec = NonrepetitiveSpec(graph, k, L_max=3)
inst = build_nonrepetitive_instance(spec)
print(f"\ninstance: {inst.m} atoms, {len(inst.events)} path events, k = {k}")
for s in (1, 2, 3):
    print(f"  d_{s} exact = {d_s_exact(inst, s):>4}   analytic s*delta^(2s-1) = {s * delta ** (2 * s - 1)}")

# %% criteria on the full series and on the truncated family
full = min_ratio(nonrepetitive_spectrum(delta, k))
trunc = min_ratio(spectrum_from_instance(inst))
print(f"\nfull series:      rho = {full.rho:.6f} at xi = {full.xi_star:.4f} ({full.verdict})")
print(f"truncated family: rho = {trunc.rho:.6f} at xi = {trunc.xi_star:.4f} ({trunc.verdict})")
st = step_threshold(trunc.rho, inst.m)
print(f"step threshold N = {st.n}, expected-steps bound = {st.expected_steps_bound:.1f}")

# %% three solvers, same seeds
trials = 500
for name in ("forest", "mt", "ec"):
    steps, ok = [], 0
    t0 = time.perf_counter()
    for t in range(trials):
        rng, _ = trial_rng(1, t)
        if name == "forest":
            cfg, _, stats = forest_algorithm(inst, rng)
            n, success = stats.steps, stats.success
        elif name == "mt":
            cfg, stats = moser_tardos_resampling(inst, rng)
            n, success = stats.steps, stats.success
        else:
            cfg, tr = entropy_compression(inst, rng, 50 * inst.m)
            n, success = tr.used_entries, tr.success
        ok += success and verify_solution(spec, cfg)
        steps.append(n)
    dt = time.perf_counter() - t0
    print(f"{name:>6}: {ok}/{trials} verified, mean steps {np.mean(steps):7.2f}, max {max(steps):4d}, {dt:.2f}s")
