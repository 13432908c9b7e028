"""Local-lemma convergence criteria and the one-dimensional searches they need.

Three families live here:

* per-event criteria on a dependency graph with weights ``mu``: the
  independent-set polynomial ``xi_cell``, its Dobrushin / Kotecky-Preiss upper
  bounds, and the clique-cover bound ``xi_clique``;
* global criteria on an instance: the subset-gas condition with parameter ``a``
  and its ``q``-form;
* spectrum criteria on ``(p_s, d_s)``: ``phi``, the ratio minimum ``rho`` and the
  entropy-compression condition.

All searches are deterministic.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import networkx as nx
import numpy as np
from scipy import optimize, sparse
from scipy.special import logsumexp

from .core import Event, Instance, event_probability
from .graph import d_s_exact

HOLDS, FAILS, BOUNDARY = "holds", "fails", "boundary"

#: Largest closed neighborhood handled by exact independent-set enumeration.
CELL_CAP = 25
#: Upper end of the search for the ratio minimizer.
XI_MAX = 1e6
#: |rho - 1| below this is reported as a boundary verdict.
BOUNDARY_TOL = 1e-9
#: Upper end of the search for the subset-gas parameter ``a``.
A_MAX = 50.0


class NeighborhoodTooLarge(ValueError):
    pass


class SeriesDivergent(ValueError):
    pass


class CriterionNotSatisfied(ValueError):
    pass


# --------------------------------------------------------------------------- per-event


def _closed_neighborhood(depgraph: nx.Graph, node) -> list:
    return sorted(set(depgraph[node]) | {node})


def independent_set_polynomial(depgraph: nx.Graph, nodes, weights: Mapping) -> float:
    """Sum over independent subsets of ``nodes`` (in ``depgraph``) of the weight products.

    Uses ``I(G) = I(G - v) + mu_v I(G - N[v])`` with component splitting and
    memoization on vertex bitmasks.
    """
    nodes = list(nodes)
    pos = {v: i for i, v in enumerate(nodes)}
    nbr = [0] * len(nodes)
    for v in nodes:
        i = pos[v]
        for u in depgraph[v]:
            j = pos.get(u)
            if j is not None and j != i:
                nbr[i] |= 1 << j
    w = [float(weights[v]) for v in nodes]
    memo: dict[int, float] = {0: 1.0}

    def component(mask: int) -> int:
        low = mask & -mask
        comp, frontier = low, low
        while frontier:
            i = (frontier & -frontier).bit_length() - 1
            frontier &= frontier - 1
            new = nbr[i] & mask & ~comp
            comp |= new
            frontier |= new
        return comp

    def solve(mask: int) -> float:
        got = memo.get(mask)
        if got is not None:
            return got
        comp = component(mask)
        if comp != mask:
            val = solve(comp) * solve(mask & ~comp)
        else:
            # branch on the highest-degree vertex of this component
            best, best_deg, rest = -1, -1, mask
            while rest:
                i = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                deg = (nbr[i] & mask).bit_count()
                if deg > best_deg:
                    best, best_deg = i, deg
            without = mask & ~(1 << best)
            val = solve(without) + w[best] * solve(without & ~nbr[best])
        memo[mask] = val
        return val

    return solve((1 << len(nodes)) - 1)


def xi_cell(event, weights: Mapping, depgraph: nx.Graph, cap: int = CELL_CAP) -> float:
    """Independent-set polynomial of the closed neighborhood of ``event``."""
    node = event.id if isinstance(event, Event) else event
    hood = _closed_neighborhood(depgraph, node)
    if len(hood) > cap:
        raise NeighborhoodTooLarge(
            f"closed neighborhood of {node} has {len(hood)} > {cap} events; use xi_clique"
        )
    return independent_set_polynomial(depgraph, hood, weights)


def classical_bounds(event, weights: Mapping, depgraph: nx.Graph) -> tuple[float, float]:
    """``(prod(1 + mu), exp(sum mu))`` over the closed neighborhood."""
    node = event.id if isinstance(event, Event) else event
    hood = _closed_neighborhood(depgraph, node)
    dob = math.prod(1.0 + float(weights[v]) for v in hood)
    kp = math.exp(math.fsum(float(weights[v]) for v in hood))
    return dob, kp


def xi_clique(event: Event, weights: Mapping, instance: Instance) -> float:
    """Product over support atoms of ``1 + sum of mu`` over events containing the atom."""
    out = 1.0
    for y in event.support:
        out *= 1.0 + math.fsum(float(weights[i]) for i in instance.incidence[y])
    return out


# --------------------------------------------------------------------------- reports


@dataclass
class CriterionEntry:
    name: str
    verdict: str
    witnesses: dict = field(default_factory=dict)
    tolerance: float = 0.0
    note: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS


def _jsonable(v):
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class CriterionReport:
    entries: list[CriterionEntry] = field(default_factory=list)
    step_threshold: int | None = None
    expected_steps_bound: float | None = None

    def add(self, entry: CriterionEntry) -> CriterionEntry:
        self.entries.append(entry)
        return entry

    def extend(self, other: "CriterionReport"):
        self.entries.extend(other.entries)

    def get(self, name: str) -> CriterionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_text(self) -> str:
        lines = []
        for e in self.entries:
            wit = " ".join(f"{k}={_fmt(v)}" for k, v in e.witnesses.items())
            line = f"{e.name:<24} {e.verdict:<9} {wit}".rstrip()
            if e.note:
                line += f"  # {e.note}"
            lines.append(line)
        if self.step_threshold is not None:
            lines.append(f"step_threshold N = {self.step_threshold}")
            lines.append(f"expected_steps_bound T = {_fmt(self.expected_steps_bound)}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["criterion", "verdict", "witnesses", "tolerance", "note"])
        for e in self.entries:
            w.writerow(
                [e.name, e.verdict, json.dumps(_jsonable(e.witnesses), sort_keys=True), repr(e.tolerance), e.note]
            )
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, Fraction):
        return f"{float(v):.10g}"
    return str(v)


def _verdict(slack_ok: bool, at_boundary: bool = False) -> str:
    if at_boundary:
        return BOUNDARY
    return HOLDS if slack_ok else FAILS


# --------------------------------------------------------------------------- CELL


def check_cell(instance: Instance, weights: Mapping, depgraph: nx.Graph | None = None,
               cap: int = CELL_CAP) -> CriterionReport:
    """Per-event ``Prob * Xi <= mu`` (``cell``) and the Dobrushin variant (``lll``).

    Events whose neighborhood exceeds ``cap`` fall back to ``xi_clique``; the
    number of such events is recorded in the ``cell`` entry.
    """
    from .core import natural_dependency_graph

    g = depgraph if depgraph is not None else natural_dependency_graph(instance)
    rtol = 1e-12
    cell_ok = lll_ok = True
    worst_cell = worst_lll = 0.0
    fallbacks = 0
    for ev in instance.events:
        p = float(event_probability(ev, instance))
        mu = float(weights[ev.id])
        try:
            xi = xi_cell(ev, weights, g, cap)
        except NeighborhoodTooLarge:
            xi = xi_clique(ev, weights, instance)
            fallbacks += 1
        dob, _ = classical_bounds(ev, weights, g)
        if p > 0:
            cell_ok &= p * xi <= mu * (1 + rtol)
            lll_ok &= p * dob <= mu * (1 + rtol)
            worst_cell = max(worst_cell, p * xi / mu if mu > 0 else math.inf)
            worst_lll = max(worst_lll, p * dob / mu if mu > 0 else math.inf)
    steps = math.fsum(float(weights[e.id]) for e in instance.events)
    rep = CriterionReport()
    rep.add(CriterionEntry("lll", _verdict(lll_ok), {"max_ratio": worst_lll, "expected_steps": steps}, rtol))
    note = f"{fallbacks} events used xi_clique" if fallbacks else ""
    rep.add(CriterionEntry("cell", _verdict(cell_ok),
                           {"max_ratio": worst_cell, "expected_steps": steps, "fallbacks": fallbacks},
                           rtol, note))
    return rep


def check_clique_cell(instance: Instance, weights: Mapping) -> CriterionEntry:
    ok, worst = True, 0.0
    for ev in instance.events:
        p = float(event_probability(ev, instance))
        if p == 0:
            continue
        mu = float(weights[ev.id])
        r = p * xi_clique(ev, weights, instance) / mu if mu > 0 else math.inf
        worst = max(worst, r)
        ok &= r <= 1 + 1e-12
    return CriterionEntry("clique-cell", _verdict(ok), {"max_ratio": worst}, 1e-12)


class _WeightSearch:
    """Vectorized evaluation of ``max_e P(e) * denominator(e) / mu_e`` for ``mu = P t^|supp|``."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.p = np.array([float(event_probability(e, instance)) for e in instance.events])
        self.size = np.array([len(e.support) for e in instance.events], dtype=float)
        n = len(instance.events)
        rows, cols = [], []
        for ids in instance.incidence:
            for i in ids:
                rows.extend([i] * len(ids))
                cols.extend(ids)
        adj = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
        adj.data[:] = 1.0
        self.adj = adj
        inc_r = [y for y, ids in enumerate(instance.incidence) for _ in ids]
        inc_c = [i for ids in instance.incidence for i in ids]
        self.inc = sparse.csr_matrix((np.ones(len(inc_r)), (inc_r, inc_c)), shape=(instance.m, n))

    def weights(self, log_t: float) -> np.ndarray:
        return self.p * np.exp(log_t * self.size)

    def log_ratio(self, log_t: float, kind: str) -> float:
        mu = self.weights(log_t)
        live = self.p > 0
        if not live.any():
            return -math.inf
        if kind == "lll":
            log_den = self.adj @ np.log1p(mu)
        elif kind == "clique":
            atom_log = np.log1p(self.inc @ mu)
            log_den = self.inc.T @ atom_log
        else:
            raise ValueError(kind)
        return float(np.max(np.log(self.p[live]) + log_den[live] - np.log(mu[live])))


def search_weights(instance: Instance, kind: str = "clique", log_t_max: float = 20.0) -> dict[int, float]:
    """Weights ``mu_e = P(e) t^|supp(e)|`` with ``t`` minimizing the worst criterion ratio.

    ``kind`` selects the denominator: ``"lll"`` (Dobrushin) or ``"clique"``.
    """
    ws = _WeightSearch(instance)
    if not instance.events:
        return {}
    grid = np.linspace(0.0, log_t_max, 201)
    vals = [ws.log_ratio(u, kind) for u in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda u: ws.log_ratio(u, kind), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    best = res.x if res.fun < vals[i] else grid[i]
    mu = ws.weights(best)
    return {e.id: float(mu[e.id]) for e in instance.events}


# --------------------------------------------------------------------------- spectra


def _eulerian(n: int, k: int) -> int:
    return sum((-1) ** l * math.comb(n + 1, l) * (k + 1 - l) ** n for l in range(k + 1))


def polylog_neg(j: int, z: float) -> float:
    """``sum_{s>=1} s^j z^s`` for ``|z| < 1``."""
    if j == 0:
        return z / (1.0 - z)
    num = sum(_eulerian(j, i) * z**i for i in range(j))
    return z * num / (1.0 - z) ** (j + 1)


def poly_series(coeffs, z: float, start: int) -> float:
    """``sum_{s>=start} P(s) z^s`` with ``P(s) = sum_j coeffs[j] s^j``."""
    if not 0 <= z < 1:
        raise SeriesDivergent(f"series divergent at z={z}")
    total = 0.0
    for j, a in enumerate(coeffs):
        if a == 0:
            continue
        head = math.fsum(s**j * z**s for s in range(1, start))
        total += a * (polylog_neg(j, z) - head)
    return total


@dataclass(frozen=True)
class GeometricTail:
    """Infinite family of powers ``s >= start`` with

    ``p_s = p_coef * p_ratio**s`` and ``d_s = poly(s) * d_ratio**s``,
    where ``poly(s) = sum_j d_poly[j] * s**j``.
    """

    start: int
    p_ratio: float
    d_poly: tuple[float, ...]
    d_ratio: float = 1.0
    p_coef: float = 1.0

    def p(self, s: int) -> float:
        return self.p_coef * self.p_ratio**s

    def d(self, s: int) -> float:
        return sum(a * s**j for j, a in enumerate(self.d_poly)) * self.d_ratio**s

    @property
    def radius(self) -> float:
        """Supremum of ``xi`` for which ``phi`` converges."""
        return 1.0 / (self.p_ratio * self.d_ratio) - 1.0

    def w_series(self, xi: float) -> float:
        z = self.p_ratio * self.d_ratio * (1.0 + xi)
        return self.p_coef * poly_series(self.d_poly, z, self.start)

    def w_series_deriv(self, xi: float) -> float:
        z = self.p_ratio * self.d_ratio * (1.0 + xi)
        shifted = (0.0,) + tuple(self.d_poly)  # s * poly(s)
        return self.p_coef * poly_series(shifted, z, self.start) / (1.0 + xi)


@dataclass(frozen=True)
class PowerSpectrum:
    """Finite terms ``{s: (p_s, d_s)}`` plus an optional closed-form tail."""

    terms: Mapping[int, tuple[float, float]] = field(default_factory=dict)
    tail: GeometricTail | None = None

    def __post_init__(self):
        terms = {int(s): (float(p), float(d)) for s, (p, d) in dict(self.terms).items()}
        for s, (p, d) in terms.items():
            if s < 1 or not 0 < p <= 1 or d < 0:
                raise ValueError(f"invalid spectrum term s={s}: p={p}, d={d}")
        if self.tail is not None and terms and max(terms) >= self.tail.start:
            raise ValueError("tail must start above the largest finite power")
        object.__setattr__(self, "terms", dict(sorted(terms.items())))

    @classmethod
    def from_weights(cls, w: Mapping[int, float]) -> "PowerSpectrum":
        """Spectrum with ``p_s = 1`` and ``d_s = w_s`` (only products matter for ``phi``)."""
        return cls({s: (1.0, float(v)) for s, v in w.items()})

    @property
    def empty(self) -> bool:
        return not self.terms and self.tail is None

    @property
    def weights(self) -> dict[int, float]:
        return {s: p * d for s, (p, d) in self.terms.items()}

    @property
    def radius(self) -> float:
        return self.tail.radius if self.tail else math.inf

    @property
    def max_power(self) -> float:
        return math.inf if self.tail else max(self.terms, default=0)


def phi(spectrum: PowerSpectrum, xi: float) -> float:
    """``sum_s p_s d_s (xi + 1)^s``, finite part plus closed-form tail."""
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    if xi >= spectrum.radius:
        raise SeriesDivergent(f"series divergent at xi={xi} (radius {spectrum.radius})")
    val = math.fsum(w * (1.0 + xi) ** s for s, w in spectrum.weights.items())
    if spectrum.tail is not None:
        val += spectrum.tail.w_series(xi)
    return val


def phi_prime(spectrum: PowerSpectrum, xi: float) -> float:
    if xi >= spectrum.radius:
        raise SeriesDivergent(f"series divergent at xi={xi}")
    val = math.fsum(s * w * (1.0 + xi) ** (s - 1) for s, w in spectrum.weights.items())
    if spectrum.tail is not None:
        val += spectrum.tail.w_series_deriv(xi)
    return val


@dataclass(frozen=True)
class MinRatio:
    rho: float
    xi_star: float
    attained: bool = True

    @property
    def verdict(self) -> str:
        return ratio_verdict(self.rho)


def ratio_verdict(rho: float, tol: float = BOUNDARY_TOL) -> str:
    if abs(rho - 1.0) <= tol:
        return BOUNDARY
    return HOLDS if rho < 1.0 else FAILS


def min_ratio(spectrum: PowerSpectrum, xi_max: float = XI_MAX) -> MinRatio:
    """Minimize ``phi(xi)/xi`` over ``xi > 0``.

    The stationarity function ``h = xi phi' - phi`` is nondecreasing with
    ``h(0+) < 0``; its root is found by bracketing and bisection. When no root
    exists below ``xi_max`` (or the tail radius) the boundary infimum is
    returned with ``attained=False``.
    """
    if spectrum.empty:
        raise ValueError("min_ratio needs a nonempty spectrum")
    if spectrum.tail is None and spectrum.max_power <= 1:
        # phi/xi = w (1 + 1/xi) decreases to w
        return MinRatio(spectrum.weights.get(1, 0.0), math.inf, attained=False)

    def h(x):
        return x * phi_prime(spectrum, x) - phi(spectrum, x)

    if phi(spectrum, 0.0) == 0.0:
        return MinRatio(0.0, 0.0, attained=True)
    limit = min(xi_max, spectrum.radius)
    hi = None
    if limit < math.inf and spectrum.radius <= xi_max:
        for i in range(1, 200):
            x = limit * (1.0 - 2.0**-i)
            if x <= 0:
                continue
            if h(x) > 0:
                hi = x
                break
    else:
        if h(limit) > 0:
            hi = limit
    if hi is None:
        x = limit * (1.0 - 1e-15) if spectrum.tail else limit
        return MinRatio(phi(spectrum, x) / x, x, attained=False)
    lo = 0.0
    # bisection until the bracket is at machine resolution
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if h(mid) > 0:
            hi = mid
        else:
            lo = mid
    xs = hi if lo == 0.0 else (lo if abs(h(lo)) <= abs(h(hi)) else hi)
    return MinRatio(phi(spectrum, xs) / xs, xs, attained=True)


def spectrum_is_uniform(spectrum: PowerSpectrum, k: float, rtol: float = 1e-12) -> bool:
    for s, (p, _) in spectrum.terms.items():
        if abs(p - k ** (-s)) > rtol * k ** (-s):
            return False
    t = spectrum.tail
    if t is not None and (abs(t.p_coef - 1.0) > rtol or abs(t.p_ratio * k - 1.0) > rtol):
        return False
    return True


@dataclass(frozen=True)
class EntropyCheck:
    verdict: str
    alpha: float
    value: float
    attained: bool
    alpha_from_xi: float | None = None

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS


def check_entropy_condition(spectrum: PowerSpectrum, k: float) -> EntropyCheck:
    """Minimize ``(1 + sum_s d_s alpha^s) / alpha`` and compare with ``k``.

    ``alpha_from_xi`` records ``(xi* + 1)/k`` from :func:`min_ratio` on the same
    spectrum; it coincides with ``alpha`` only at the boundary.
    """
    if not spectrum_is_uniform(spectrum, k):
        raise ValueError("entropy condition needs a uniform spectrum (p_s = k^-s)")
    ds = {s: d for s, (_, d) in spectrum.terms.items()}
    tail = spectrum.tail
    radius = 1.0 / tail.d_ratio if tail else math.inf

    def dsum(a):
        v = math.fsum(d * a**s for s, d in ds.items())
        if tail is not None:
            v += poly_series(tail.d_poly, tail.d_ratio * a, tail.start)
        return v

    def f(a):
        return (1.0 + dsum(a)) / a

    def g(a):  # a * D'(a) - D(a) - 1, nondecreasing
        v = math.fsum((s - 1) * d * a**s for s, d in ds.items())
        if tail is not None:
            z = tail.d_ratio * a
            v += poly_series(tuple(np.polynomial.polynomial.polymul((-1.0, 1.0), tail.d_poly)), z, tail.start)
        return v - 1.0

    xi_alpha = None
    if not spectrum.empty:
        mr = min_ratio(spectrum)
        if math.isfinite(mr.xi_star):
            xi_alpha = (mr.xi_star + 1.0) / k
    if spectrum.empty:
        return EntropyCheck(_entropy_verdict(0.0, k), math.inf, 0.0, False, xi_alpha)
    if tail is None and max(ds) <= 1:
        inf = ds.get(1, 0.0)
        return EntropyCheck(_entropy_verdict(inf, k), math.inf, inf, False, xi_alpha)
    hi = None
    if radius < math.inf:
        for i in range(1, 200):
            a = radius * (1.0 - 2.0**-i)
            if g(a) > 0:
                hi = a
                break
    else:
        hi = 1.0
        while g(hi) <= 0 and hi < 1e300:
            hi *= 2.0
    if hi is None:
        a = radius * (1.0 - 1e-15)
        return EntropyCheck(_entropy_verdict(f(a), k), a, f(a), False, xi_alpha)
    lo = 0.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    a = hi if lo == 0.0 else lo
    val = f(a)
    return EntropyCheck(_entropy_verdict(val, k), a, val, True, xi_alpha)


def _entropy_verdict(value: float, k: float) -> str:
    if abs(value - k) <= BOUNDARY_TOL * max(1.0, k):
        return BOUNDARY
    return HOLDS if value < k else FAILS


def spectrum_from_instance(instance: Instance) -> PowerSpectrum:
    """Exact ``(p_s, d_s)`` of a finite family; powers whose events all have probability 0 are dropped."""
    probs: dict[int, float] = {}
    for ev in instance.events:
        p = float(event_probability(ev, instance))
        probs[ev.power] = max(probs.get(ev.power, 0.0), p)
    terms = {s: (p, d_s_exact(instance, s)) for s, p in probs.items() if p > 0}
    return PowerSpectrum(terms)


# --------------------------------------------------------------------------- global subset-gas condition


@dataclass(frozen=True)
class GlobalCellResult:
    verdict: str
    a_star: float
    log_ratio: float
    q: float
    nps_verdict: str | None
    nps_alpha: float | None
    expected_steps: float | None

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS


def _refined_min(fun, lo: float, hi: float, n: int = 400, log_grid: bool = True):
    grid = np.geomspace(lo, hi, n) if log_grid else np.linspace(lo, hi, n)
    vals = np.array([fun(x) for x in grid])
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    res = optimize.minimize_scalar(fun, bounds=(a, b), method="bounded", options={"xatol": 1e-13})
    if res.fun <= vals[i]:
        return float(res.x), float(res.fun)
    return float(grid[i]), float(vals[i])


def check_global_cell(instance: Instance, a_max: float = A_MAX) -> GlobalCellResult:
    """Search ``a > 0`` with ``sup_x sum_{e ni x} P(e) e^{a|supp e|} <= e^a - 1``.

    Also reports ``q = max |supp|/power`` and, on uniform instances, the
    ``q``-form ``(1 + sum d_s alpha^s)^q / alpha <= k``.
    """
    per_atom: list[tuple[np.ndarray, np.ndarray]] = []
    probs = [float(event_probability(e, instance)) for e in instance.events]
    for ids in instance.incidence:
        live = [i for i in ids if probs[i] > 0]
        if live:
            per_atom.append(
                (np.log([probs[i] for i in live]),
                 np.array([len(instance.events[i].support) for i in live], dtype=float))
            )
    q = max((len(e.support) / e.power for e in instance.events), default=1.0)

    def log_ratio(a):
        lhs = max(float(logsumexp(lp + a * sz)) for lp, sz in per_atom)
        return lhs - (a + math.log(-math.expm1(-a)))

    if not per_atom:
        a_star, lr = 1.0, -math.inf
    else:
        a_star, lr = _refined_min(log_ratio, 1e-6, a_max)
    ok = lr <= 1e-12
    steps = None
    if ok:
        steps = math.fsum(p * math.exp(a_star * len(e.support)) for p, e in zip(probs, instance.events))

    nps_verdict = nps_alpha = None
    if instance.is_uniform:
        k = instance.k
        ds = {}
        for e in instance.events:
            ds.setdefault(e.power, 0)
        ds = {s: d_s_exact(instance, s) for s in ds}
        if not ds:
            nps_verdict, nps_alpha = HOLDS, 1.0
        else:
            def nps_log(u):
                return q * math.log1p(math.fsum(d * math.exp(s * u) for s, d in ds.items())) - u

            u, val = _refined_min(nps_log, -40.0, 40.0, log_grid=False, n=801)
            nps_alpha = math.exp(u)
            nps_verdict = HOLDS if val <= math.log(k) + 1e-12 else FAILS
    return GlobalCellResult(_verdict(ok), a_star, lr, q, nps_verdict, nps_alpha, steps)


# --------------------------------------------------------------------------- step threshold


@dataclass(frozen=True)
class StepThreshold:
    n: int
    expected_steps_bound: float


def step_threshold(rho: float, m: int) -> StepThreshold:
    """``N = ceil(x ln^2 x)`` with ``x = 2m/|ln rho|``, and ``T <= N(N+1)/2 + sum_{n>N} n rho^{n/2}``."""
    if not 0 < rho < 1:
        raise CriterionNotSatisfied(f"criterion not satisfied: rho = {rho}")
    if m < 1:
        raise ValueError("m must be >= 1")
    x = 2 * m / abs(math.log(rho))
    n = max(0, math.ceil(x * math.log(x) ** 2))
    r = math.sqrt(rho)
    tail = r ** (n + 1) * ((n + 1) - n * r) / (1 - r) ** 2
    return StepThreshold(n, n * (n + 1) / 2 + tail)
