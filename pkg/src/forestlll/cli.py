"""Command-line experiment runner: ``forestlll {criteria,solve,bounds,bench}``.

Experiments are described by an INI file with one ``[experiment]`` section::

    [experiment]
    application = nonrepetitive      # nonrepetitive | facial | frugal | instance
    graph = grid6.txt                # edge list, relative to this file
    faces = faces.txt                # facial only
    lists = lists.txt                # facial only, optional: one list per edge line
    instance = toy.inst              # instance only
    k = 48
    beta = 2
    L_max = 3
    solver = forest                  # mt | forest | ec
    trials = 100
    seed = 0
    step_cap = 1000000
    out = results/grid.csv

Command-line flags override file values. Without ``--out`` and ``out``, files go
to ``$FORESTLLL_OUT`` when set, otherwise the CSV is printed.

Exit codes: 0 success, 1 criterion fails or is at the boundary, 2 solver
exhausted, 3 input error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .applications import (
    FacialThueSpec,
    FrugalSpec,
    NonrepetitiveSpec,
    build_instance,
    facial_spectrum,
    frugal_bound,
    frugal_spectrum,
    nonrepetitive_bounds,
    nonrepetitive_spectrum,
    verify_solution,
)
from .core import Instance, InstanceFormatError, read_instance
from .criteria import (
    BOUNDARY_TOL,
    HOLDS,
    CriterionEntry,
    CriterionReport,
    check_cell,
    check_clique_cell,
    check_entropy_condition,
    check_global_cell,
    min_ratio,
    search_weights,
    spectrum_from_instance,
    spectrum_is_uniform,
    step_threshold,
)
from .graph import max_degree, read_edge_list, read_faces
from .solvers import DEFAULT_STEP_CAP, entropy_compression, forest_algorithm, moser_tardos_resampling, trial_rng

EXIT_OK, EXIT_CRITERION, EXIT_EXHAUSTED, EXIT_INPUT = 0, 1, 2, 3
OUT_ENV = "FORESTLLL_OUT"
APPLICATIONS = ("nonrepetitive", "facial", "frugal", "instance")
SOLVERS = ("mt", "forest", "ec")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    application: str = "instance"
    graph: str | None = None
    faces: str | None = None
    lists: str | None = None
    instance: str | None = None
    k: int | None = None
    beta: int | None = None
    L_max: int = 1
    solver: str = "forest"
    trials: int = 1
    seed: int = 0
    step_cap: int | None = None
    t: int | None = None
    out: str | None = None
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.application not in APPLICATIONS:
            raise ConfigError(f"unknown application {self.application!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.step_cap is not None and self.step_cap < 1:
            raise ConfigError("step_cap must be >= 1")
        need = {"instance": ("instance",), "facial": ("graph", "faces"),
                "nonrepetitive": ("graph",), "frugal": ("graph",)}[self.application]
        for name in need:
            path = getattr(self, name)
            if path is None:
                raise ConfigError(f"{self.application} needs a {name} file")
        for name in ("graph", "faces", "lists", "instance"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{name} file not found: {path}")
        if self.application in ("nonrepetitive", "frugal") and self.k is None:
            raise ConfigError(f"{self.application} needs k")
        if self.application == "facial" and self.k is None and self.lists is None:
            raise ConfigError("facial needs k or a lists file")
        if self.application == "frugal" and self.beta is None:
            raise ConfigError("frugal needs beta")
        return self

    @classmethod
    def load(cls, path: str | os.PathLike | None, **overrides) -> "ExperimentConfig":
        values: dict = {}
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise ConfigError(f"config file not found: {path}")
            cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
            cp.optionxform = str
            try:
                cp.read(path)
            except configparser.Error as exc:
                raise ConfigError(f"malformed config: {exc}") from exc
            if not cp.has_section("experiment"):
                raise ConfigError("config needs an [experiment] section")
            known = {f for f in cls.__dataclass_fields__}
            for key, raw in cp.items("experiment"):
                if key not in known:
                    raise ConfigError(f"unknown config key {key!r}")
                values[key] = raw
            for key in ("graph", "faces", "lists", "instance", "out"):
                if key in values and not Path(values[key]).is_absolute():
                    values[key] = str(path.parent / values[key])
        values.update({k: v for k, v in overrides.items() if v is not None})
        ints = ("k", "beta", "L_max", "trials", "seed", "step_cap", "t", "workers")
        try:
            for key in ints:
                if key in values and values[key] is not None:
                    values[key] = int(values[key])
        except ValueError as exc:
            raise ConfigError(f"malformed integer in config: {exc}") from exc
        return cls(**values).validate()


# --------------------------------------------------------------------------- building


def _read_lists(path: str) -> list[tuple[int, ...]]:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append(tuple(int(v) for v in line.split()))
    return rows


def build_spec(cfg: ExperimentConfig):
    """Application spec for ``cfg`` (``None`` for raw instances)."""
    if cfg.application == "instance":
        return None
    graph = read_edge_list(cfg.graph)
    if cfg.application == "nonrepetitive":
        return NonrepetitiveSpec(graph, cfg.k, cfg.L_max)
    if cfg.application == "frugal":
        return FrugalSpec(graph, cfg.k, cfg.beta)
    faces = read_faces(cfg.faces, graph)
    if cfg.lists is not None:
        return FacialThueSpec(graph, faces, tuple(_read_lists(cfg.lists)), cfg.L_max)
    return FacialThueSpec.with_common_list(graph, faces, cfg.k, cfg.L_max)


def build(cfg: ExperimentConfig) -> tuple[object, Instance]:
    try:
        spec = build_spec(cfg)
        inst = read_instance(cfg.instance) if spec is None else build_instance(spec)
    except (InstanceFormatError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid input: {exc}") from exc
    return spec, inst


def series_spectrum(cfg: ExperimentConfig, spec):
    """Full-series (analytic) spectrum of an application, or ``None``."""
    if isinstance(spec, NonrepetitiveSpec):
        return nonrepetitive_spectrum(max(max_degree(spec.graph), 1), spec.k)
    if isinstance(spec, FacialThueSpec):
        return facial_spectrum(spec.k)
    if isinstance(spec, FrugalSpec):
        return frugal_spectrum(max(max_degree(spec.graph), 1), spec.beta, spec.k)
    return None


# --------------------------------------------------------------------------- criteria


def default_step_cap(spec, inst: Instance) -> int:
    """``10 N`` (at least 1000) when the ratio criterion holds, else ``DEFAULT_STEP_CAP``."""
    sp = series_spectrum(None, spec) if spec is not None else spectrum_from_instance(inst)
    if sp.empty:
        return DEFAULT_STEP_CAP
    rho = min_ratio(sp).rho
    if not 0 < rho < 1 or abs(rho - 1) <= BOUNDARY_TOL:
        return DEFAULT_STEP_CAP
    return max(10 * step_threshold(rho, inst.m).n, 1000)


def _ratio_entry(name: str, spectrum) -> CriterionEntry:
    if spectrum.empty:
        return CriterionEntry(name, HOLDS, {"rho": 0.0}, BOUNDARY_TOL, "empty family")
    mr = min_ratio(spectrum)
    note = "" if mr.attained else "boundary infimum, not attained"
    return CriterionEntry(name, mr.verdict, {"rho": mr.rho, "xi_star": mr.xi_star}, BOUNDARY_TOL, note)


def criteria_report(cfg: ExperimentConfig, spec, inst: Instance) -> CriterionReport:
    rep = CriterionReport()
    series = series_spectrum(cfg, spec)
    family = spectrum_from_instance(inst)
    if series is not None:
        rep.add(_ratio_entry("min-ratio", series))
        rep.add(_ratio_entry("min-ratio-family", family))
    else:
        rep.add(_ratio_entry("min-ratio", family))
    if inst.is_uniform:
        for name, sp in (("entropy", series), ("entropy-family", family)):
            if sp is None or not spectrum_is_uniform(sp, inst.k):
                continue
            ec = check_entropy_condition(sp, inst.k)
            rep.add(CriterionEntry(name, ec.verdict,
                                   {"alpha": ec.alpha, "value": ec.value, "k": inst.k,
                                    "alpha_from_xi": ec.alpha_from_xi},
                                   BOUNDARY_TOL, "" if ec.attained else "boundary infimum"))
    gc = check_global_cell(inst)
    wit = {"a": gc.a_star, "log_ratio": gc.log_ratio, "q": gc.q}
    if gc.expected_steps is not None:
        wit["expected_steps"] = gc.expected_steps
    rep.add(CriterionEntry("global", gc.verdict, wit, 1e-12))
    if gc.nps_verdict is not None:
        rep.add(CriterionEntry("global-q", gc.nps_verdict, {"alpha": gc.nps_alpha, "q": gc.q}, 1e-12))
    weights = search_weights(inst, "clique")
    rep.extend(check_cell(inst, weights))
    rep.add(check_clique_cell(inst, weights))
    head = rep.entries[0]
    if head.verdict == HOLDS and head.witnesses["rho"] > 0:
        st = step_threshold(head.witnesses["rho"], inst.m)
        rep.step_threshold, rep.expected_steps_bound = st.n, st.expected_steps_bound
    return rep


# --------------------------------------------------------------------------- trials


@dataclass
class ResultRow:
    trial: int
    rng_seed: int
    steps: int
    phases: int
    success: bool
    verified: bool
    wall_time: float = field(default=0.0, compare=False)


_WORKER: dict = {}


def _init_worker(cfg: ExperimentConfig):
    spec, inst = build(cfg)
    _WORKER.update(cfg=cfg, spec=spec, inst=inst)


def _verify(spec, inst: Instance, config) -> bool:
    if spec is None:
        return not inst.occurring_mask(config).any()
    return verify_solution(spec, config)


def run_trial(cfg: ExperimentConfig, spec, inst: Instance, trial: int, solver: str | None = None):
    solver = solver or cfg.solver
    rng, seed = trial_rng(cfg.seed, trial)
    t0 = time.perf_counter()
    if solver == "mt":
        config, st = moser_tardos_resampling(inst, rng, cfg.step_cap)
        steps, phases, ok = st.steps, 0, st.success
    elif solver == "forest":
        config, _, st = forest_algorithm(inst, rng, cfg.step_cap, rng_seed=seed)
        steps, phases, ok = st.steps, st.phases, st.success
    else:
        t = cfg.t if cfg.t is not None else 50 * inst.m
        config, tr = entropy_compression(inst, rng, t)
        steps, phases, ok = tr.used_entries, 0, tr.success
    wall = time.perf_counter() - t0
    verified = bool(ok and _verify(spec, inst, config))
    return ResultRow(trial, seed, steps, phases, bool(ok), verified, wall), (config if ok else None)


def _worker_trial(args):
    trial, solver = args
    w = _WORKER
    return run_trial(w["cfg"], w["spec"], w["inst"], trial, solver)


def run_trials(cfg: ExperimentConfig, spec=None, inst: Instance | None = None, solver: str | None = None):
    """All trials of ``cfg`` in trial order; parallel when ``cfg.workers > 1``."""
    if inst is None:
        spec, inst = build(cfg)
    if cfg.step_cap is None:
        cfg = replace(cfg, step_cap=default_step_cap(spec, inst))
    jobs = [(i, solver) for i in range(cfg.trials)]
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(cfg,)) as pool:
            return list(pool.map(_worker_trial, jobs, chunksize=max(1, cfg.trials // (4 * cfg.workers))))
    return [run_trial(cfg, spec, inst, i, solver) for i, _ in jobs]


def rows_to_csv(rows, timing: bool = False, extra: dict | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = (list(extra) if extra else []) + ["trial", "rng_seed", "steps", "phases", "success", "verified"]
    if timing:
        head.append("wall_time")
    w.writerow(head)
    for r in rows:
        line = (list(extra.values()) if extra else []) + [
            r.trial, r.rng_seed, r.steps, r.phases, int(r.success), int(r.verified)]
        if timing:
            line.append(f"{r.wall_time:.6f}")
        w.writerow(line)
    return buf.getvalue()


def _metadata(cfg: ExperimentConfig, command: str, **extra) -> dict:
    meta = {"tool": "forestlll", "version": __version__, "command": command,
            "master_seed": cfg.seed, "trials": cfg.trials, "solver": cfg.solver,
            "step_cap": cfg.step_cap, "boundary_tol": BOUNDARY_TOL, "rng": "numpy PCG64 via SeedSequence([seed, trial])"}
    conf = asdict(cfg)
    for key in ("graph", "faces", "lists", "instance", "out"):
        if conf.get(key):
            conf[key] = os.path.basename(conf[key])
    meta["config"] = conf
    meta.update(extra)
    return meta


# --------------------------------------------------------------------------- output


def _out_path(cfg_out: str | None, flag_out: str | None, default_name: str) -> Path | None:
    if flag_out:
        return Path(flag_out)
    if cfg_out:
        return Path(cfg_out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env) / default_name
    return None


def _emit(path: Path | None, text: str, meta: dict | None = None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    if meta is not None:
        Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")


# --------------------------------------------------------------------------- commands


def cmd_criteria(args) -> int:
    cfg = ExperimentConfig.load(args.config, **_overrides(args))
    spec, inst = build(cfg)
    rep = criteria_report(cfg, spec, inst)
    try:
        wanted = rep.get(args.criterion)
    except KeyError:
        raise ConfigError(f"criterion {args.criterion!r} not available; have "
                          + ", ".join(e.name for e in rep.entries))
    path = _out_path(None, args.out, "criteria.csv")
    meta = _metadata(cfg, "criteria", requested=args.criterion, verdict=wanted.verdict)
    if path is None:
        sys.stdout.write(rep.to_text())
    else:
        _emit(path, rep.to_csv(), meta)
        sys.stdout.write(rep.to_text())
    return EXIT_OK if wanted.verdict == HOLDS else EXIT_CRITERION


def cmd_solve(args) -> int:
    cfg = ExperimentConfig.load(args.config, **_overrides(args))
    spec, inst = build(cfg)
    if cfg.step_cap is None:
        cfg = replace(cfg, step_cap=default_step_cap(spec, inst))
    results = run_trials(cfg, spec, inst)
    rows = [r for r, _ in results]
    path = _out_path(cfg.out, args.out, "solve.csv")
    successes = sum(r.success for r in rows)
    bad = [r.trial for r in rows if r.success and not r.verified]
    meta = _metadata(cfg, "solve", successes=successes, verifier_failures=bad)
    _emit(path, rows_to_csv(rows, timing=args.timing), meta)
    solution = next((c for _, c in results if c is not None), None)
    if solution is not None and path is not None:
        Path(str(path) + ".solution.txt").write_text(" ".join(str(int(v)) for v in solution) + "\n")
    if bad:
        print(f"verifier rejected successful trials {bad}", file=sys.stderr)
        return EXIT_EXHAUSTED
    if not successes:
        print("all trials hit the step cap", file=sys.stderr)
        return EXIT_EXHAUSTED
    return EXIT_OK


def bounds_table(delta: int, beta: int | None = None) -> tuple[str, dict]:
    b = nonrepetitive_bounds(delta)
    rows = [("delta", delta), ("b0", b.b0), ("xi0", b.xi0), ("pi_bound", b.pi_bound),
            ("gmp_bound", b.gmp_bound if b.gmp_bound is not None else "unavailable (delta <= 2)"),
            ("residual", b.residual)]
    if b.gmp_bound is not None:
        rows.append(("smaller", "pi_bound" if b.pi_bound < b.gmp_bound else "gmp_bound"))
    meta = {"residual": b.residual, "delta": delta}
    if beta is not None:
        fb = frugal_bound(delta, beta)
        rows.append(("beta", beta))
        rows.append(("frugal_closed_form", fb.closed_form if fb.closed_form is not None else "undefined"))
        rows.append(("frugal_generic_k", fb.generic_k))
        if fb.note:
            rows.append(("note", fb.note))
        meta["frugal_generic_k"] = fb.generic_k
    text = "".join(f"{k:<20} {v:.12g}\n" if isinstance(v, float) else f"{k:<20} {v}\n" for k, v in rows)
    return text, meta


def cmd_bounds(args) -> int:
    if args.delta < 2:
        raise ConfigError("delta must be >= 2")
    if args.beta is not None and args.beta < 1:
        raise ConfigError("beta must be >= 1")
    text, meta = bounds_table(args.delta, args.beta)
    path = _out_path(None, args.out, "bounds.txt")
    _emit(path, text, meta)
    if path is not None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = ExperimentConfig.load(args.config, **_overrides(args))
    spec, inst = build(cfg)
    solvers = [cfg.solver] if args.solver else list(SOLVERS)
    if not inst.is_uniform and "ec" in solvers:
        solvers.remove("ec")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["solver", "trials", "successes", "mean_steps", "max_steps", "mean_wall_time"])
    any_fail = False
    for s in solvers:
        rows = [r for r, _ in run_trials(cfg, spec, inst, solver=s)]
        steps = np.array([r.steps for r in rows], dtype=float)
        succ = sum(r.success and r.verified for r in rows)
        any_fail |= succ == 0
        w.writerow([s, len(rows), succ, f"{steps.mean():.4f}", int(steps.max()),
                    f"{np.mean([r.wall_time for r in rows]):.6f}"])
    _emit(_out_path(None, args.out, "bench.csv"), buf.getvalue(), _metadata(cfg, "bench"))
    return EXIT_EXHAUSTED if any_fail else EXIT_OK


def _overrides(args) -> dict:
    return {"seed": getattr(args, "seed", None), "trials": getattr(args, "trials", None),
            "solver": getattr(args, "solver", None), "step_cap": getattr(args, "step_cap", None),
            "workers": getattr(args, "workers", None)}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="forestlll", description="Local-lemma criteria and resampling experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, solving: bool):
        sp.add_argument("--config", required=True, help="experiment INI file")
        sp.add_argument("--seed", type=int, help="master RNG seed")
        sp.add_argument("--out", help=f"output file (default: config 'out', then ${OUT_ENV}, then stdout)")
        if solving:
            sp.add_argument("--trials", type=int)
            sp.add_argument("--solver", choices=SOLVERS)
            sp.add_argument("--step-cap", type=int, dest="step_cap")
            sp.add_argument("--workers", type=int, help="worker processes (rows stay in trial order)")
            sp.add_argument("--timing", action="store_true", help="add a wall_time column (not byte-stable)")

    c = sub.add_parser("criteria", help="evaluate every applicable criterion")
    common(c, False)
    c.add_argument("--criterion", default="min-ratio", help="criterion deciding the exit code")
    c.set_defaults(func=cmd_criteria)

    s = sub.add_parser("solve", help="run a solver for a number of trials")
    common(s, True)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bounds", help="closed-form coloring bounds for a maximum degree")
    b.add_argument("--delta", type=int, required=True)
    b.add_argument("--beta", type=int)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    bn = sub.add_parser("bench", help="compare solvers on one configuration")
    common(bn, True)
    bn.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors; 2 means "exhausted" here
        return EXIT_INPUT if exc.code == 2 else (exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
