"""Reproducible experiment runner.

Every certification scenario is a subcommand with seeded determinism;
outputs are ``results.csv`` (scenario, estimator, value, se, n, seed,
verdict), ``report.json``, and diagnostic figures under ``figures/``.
Exit codes: 0 all requested verdicts pass, 1 a verdict failed, 2 usage
or scenario-file error, 3 a scenario gate rejected the setup.

Worker count for the suite runner comes from ``PALM_FORGE_THREADS``
(default: logical cores); rows are emitted in deterministic order
regardless of completion order.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import plots
from .configs import MERGE_TOL, collision_count, perturb, translate
from .errors import GateError, PalmForgeError
from .groups import cyclic_group, real_line
from .increments import (
    HeavyTailWalk,
    IidWalk,
    NegationField,
    ZeroField,
    parse_field_spec,
    sample_field,
)
from .palm import (
    HEAVY_TAIL_FIXTURE_SEEDS,
    BatchRole,
    LatticePalm,
    PoissonPalm,
    RenewalPalm,
    GammaGaps,
    SampleBatch,
    UniformBump,
    batch_to_jsonl,
    collision_audit,
    divergence_gate,
    invert_palm_compact,
    invert_palm_realline,
    make_palm_batch,
    palm_of_stationary,
    perturb_palm,
    running_mean_table,
    sample_lattice_palm,
    shifted_lattice_pseudo_palm,
    voronoi_mass_estimate,
)
from .report import Row, write_report_json, write_results_csv
from .scenarios import ScenarioKeyError, parse_palm_spec, parse_scenario_file
from .streams import substream
from .verify import (
    LaplaceBump,
    TestReport,
    canonical_battery,
    ergodic_average_decay,
    lemma_identity_check,
    mecke_battery,
    stationarity_test,
)

DEFAULT_SEED = 7
DEFAULT_WINDOW = 16.0
DEFAULT_N = 10_000
DEFAULT_LEVEL = 0.01
STATIONARITY_OFFSETS = (0.0, 0.37, 2.61)
ERGODIC_FUNCTIONAL = LaplaceBump(0.0, 1.0, 0.0, 1.0, 1.0)


def thread_count() -> int:
    raw = os.environ.get("PALM_FORGE_THREADS", "")
    if raw.strip():
        value = int(raw)
        if value < 1:
            raise ValueError("PALM_FORGE_THREADS must be a positive integer")
        return value
    return os.cpu_count() or 1


class Output:
    """Collects rows, report fragments and figure jobs for one run."""

    def __init__(self, outdir: Path, figures: bool):
        self.outdir = Path(outdir)
        self.figures = figures
        self.rows: list[Row] = []
        self.reports: dict = {}

    def add_rows(self, rows):
        self.rows.extend(rows)

    def add_report(self, key: str, report):
        self.reports[key] = report.to_json() if isinstance(report, TestReport) else report

    def figure_path(self, name: str) -> Path:
        return self.outdir / "figures" / name

    def finalize(self, deterministic: bool) -> int:
        write_results_csv(self.rows, self.outdir / "results.csv", deterministic)
        write_report_json({"results": [r.formatted() for r in self.rows],
                           "reports": self.reports},
                          self.outdir / "report.json", deterministic)
        verdicts = [r.verdict for r in self.rows if r.verdict is not None]
        for row in self.rows:
            if row.verdict is not None:
                mark = "pass" if row.verdict else "FAIL"
                print(f"[{mark}] {row.scenario} :: {row.estimator} = {row.value:.6g}")
        return 0 if all(verdicts) else 1


def _palm_source(args):
    return parse_palm_spec(args.palm, lam=args.lam, gap=args.gap)


def _scenario_id(kind: str, palm_label: str, field_label: str | None) -> str:
    return f"{kind}/{palm_label}" + (f"+{field_label}" if field_label else "")


def _build_palm_batch(args, source, field, scenario):
    window = real_line().centered_window(args.window)
    batch = make_palm_batch(source, window, args.n, args.seed, scenario)
    if field is not None and not isinstance(field, ZeroField):
        batch = perturb_palm(batch, field, args.seed, scenario,
                             merge_tol=args.merge_tol)
    return batch


# ---------------------------------------------------------------------------
# Subcommand runners.  Each returns (rows, exit-note); they append to the
# shared Output so `all` can reuse them.
# ---------------------------------------------------------------------------

def run_mecke(args, out: Output):
    source = _palm_source(args)
    field = parse_field_spec(args.field) if args.field else None
    scenario = _scenario_id("mecke", source.label(), field.label() if field else None)
    start = time.perf_counter()
    batch = _build_palm_batch(args, source, field, scenario)
    report = mecke_battery(batch, level=args.level, scenario=scenario, seed=args.seed)
    elapsed = time.perf_counter() - start
    rows = []
    for row in report.rows:
        rows.append(Row(scenario, f"mecke_residual[{row.name}]", row.residual,
                        se=row.se, n=report.n, seed=args.seed, verdict=row.passed))
    rows.append(Row(scenario, "mecke_battery_max_abs_z", report.max_abs_z(),
                    n=report.n, seed=args.seed, verdict=report.passed))
    if not getattr(args, "deterministic", False):
        # wall-clock provenance, suppressed for byte-stable output
        rows.append(Row(scenario, "runtime_s", elapsed, n=report.n, seed=args.seed))
    out.add_rows(rows)
    out.add_report(scenario, report)
    if out.figures:
        zs = [r.z for r in report.rows]
        plots.save_z_scores([r.name for r in report.rows], zs, report.threshold,
                            out.figure_path(_slug(scenario) + ".png"),
                            title=scenario)
    return rows


def run_invert(args, out: Output):
    source = _palm_source(args)
    field = parse_field_spec(args.field) if args.field else None
    scenario = _scenario_id("invert", source.label(), field.label() if field else None)
    batch = _build_palm_batch(args, source, field, scenario)
    stationary = invert_palm_realline(batch, args.seed, scenario)
    mass, mass_se = stationary.mass_estimate()
    offsets = tuple(float(x) for x in args.offsets.split(","))
    bin_lo, bin_hi = (float(x) for x in args.bin.split(","))
    report = stationarity_test(stationary, offsets, (bin_lo, bin_hi),
                               level=args.level, scenario=scenario, seed=args.seed)
    rows = [Row(scenario, "inversion_mass", mass, se=mass_se, n=batch.n_draws,
                seed=args.seed)]
    for row in report.rows:
        rows.append(Row(scenario, f"stationarity_p[{row.name}]", row.p_value,
                        n=report.n, seed=args.seed, verdict=row.passed))
    rows.append(Row(scenario, "stationarity_pass", float(report.passed),
                    n=report.n, seed=args.seed, verdict=report.passed))
    out.add_rows(rows)
    out.add_report(scenario, report)
    if args.save_batch:
        batch_to_jsonl(stationary, args.save_batch)
    if out.figures:
        counts = {}
        for off in offsets:
            per_item = [
                float(c.weights[(c.locations >= bin_lo + off) & (c.locations < bin_hi + off)].sum())
                for c, _ in stationary.items
            ]
            counts[f"offset {off:g}"] = per_item
        plots.save_count_ecdfs(counts, stationary.weights(),
                               out.figure_path(_slug(scenario) + ".png"),
                               title=scenario)
    return rows


def run_voronoi(args, out: Output):
    source = _palm_source(args)
    field = parse_field_spec(args.field) if args.field else None
    scenario = _scenario_id("voronoi", source.label(), field.label() if field else None)
    batch = _build_palm_batch(args, source, field, scenario)
    est, se = voronoi_mass_estimate(batch)
    stationary = invert_palm_realline(batch, args.seed, scenario)
    inv_mass, inv_se = stationary.mass_estimate()
    joint = math.hypot(se, inv_se)
    agree = abs(est - inv_mass) <= 3.0 * joint if joint > 0 else est == inv_mass
    rows = [
        Row(scenario, "voronoi_mass", est, se=se, n=batch.n_draws, seed=args.seed),
        Row(scenario, "inversion_mass", inv_mass, se=inv_se, n=batch.n_draws, seed=args.seed),
        Row(scenario, "estimator_agreement", abs(est - inv_mass), se=joint,
            n=batch.n_draws, seed=args.seed, verdict=bool(agree)),
    ]
    out.add_rows(rows)
    if out.figures:
        from .configs import voronoi_zero_volume
        vols = [voronoi_zero_volume(c) for c, _ in batch.items]
        plots.save_cell_histogram(vols, batch.weights(),
                                  out.figure_path(_slug(scenario) + ".png"),
                                  title=scenario)
    return rows


def run_collisions(args, out: Output):
    field = parse_field_spec(args.field)
    sources = (LatticePalm(), PoissonPalm(args.lam), RenewalPalm(GammaGaps(2.0, 0.5)))
    rows = []
    for source in sources:
        scenario = _scenario_id("collisions", source.label(), field.label())
        window = real_line().centered_window(args.window)
        batch = make_palm_batch(source, window, args.n, args.seed, scenario)
        counts = collision_audit(batch, field, args.seed, scenario)
        colliding = int((counts > 0).sum())
        rows.append(Row(scenario, "samples_with_collisions", colliding,
                        n=args.n, seed=args.seed, verdict=colliding == 0))
    out.add_rows(rows)
    return rows


def run_compact(args, out: Output):
    domain = cyclic_group(args.order)
    field = parse_field_spec(args.field)
    scenario = _scenario_id("compact", f"lattice@{domain.label()}", field.label())
    window = domain.full_window()
    m = args.order
    rows = []

    # Deterministic fixture: the full group under negation collapses to a
    # single atom of weight m at zero, with m*(m-1) ordered collisions.
    full = sample_lattice_palm(window)
    negation = sample_field(NegationField(), domain, full.locations,
                            substream(args.seed, scenario, "fixture"))
    collapsed = perturb(full, negation)
    ncoll = collision_count(full, negation)
    fixture_ok = (collapsed.n_atoms == 1 and collapsed.locations[0] == 0
                  and collapsed.weights[0] == m and ncoll == m * (m - 1))
    print(f"fixture: xi_B = {m}*delta_0 "
          f"({collapsed.n_atoms} atom at {collapsed.locations[0]}, "
          f"weight {collapsed.weights[0]:g}; collisions {ncoll}) "
          f"-> {'ok' if fixture_ok else 'MISMATCH'}")
    rows.append(Row(scenario, "fixture_atoms", collapsed.n_atoms, verdict=collapsed.n_atoms == 1))
    rows.append(Row(scenario, "fixture_zero_weight", float(collapsed.weights[0]),
                    verdict=bool(collapsed.weights[0] == m)))
    rows.append(Row(scenario, "fixture_collisions", ncoll, verdict=ncoll == m * (m - 1)))
    from .configs import config_to_json
    import json as _json

    out.outdir.mkdir(parents=True, exist_ok=True)
    with open(out.outdir / f"fixtures_{_slug(scenario)}.json", "w") as fh:
        _json.dump({"collapsed_full_group": config_to_json(collapsed),
                    "source_full_group": config_to_json(full)}, fh, indent=2)
        fh.write("\n")

    # Mass product: reconstructed mass of the perturbed batch must be the
    # unperturbed mass times the field mass.
    batch = make_palm_batch(LatticePalm(), window, args.n, args.seed, scenario)
    _, (mass0, _) = invert_palm_compact(batch, args.seed, scenario + "/plain")
    perturbed = perturb_palm(batch, field, args.seed, scenario)
    _, (mass1, se1) = invert_palm_compact(perturbed, args.seed, scenario + "/perturbed")
    expected = mass0 * field.mass
    exact = mass1 == expected
    within = exact or (not math.isnan(se1) and abs(mass1 - expected) <= 3.0 * se1)
    print(f"mass product: unperturbed {mass0:g} x field mass {field.mass:g} "
          f"= {expected:g}; reconstructed {mass1:g} "
          f"({'exact' if exact else 'within 3*SE' if within else 'MISMATCH'})")
    rows.append(Row(scenario, "mass_unperturbed", mass0, n=args.n, seed=args.seed))
    rows.append(Row(scenario, "mass_perturbed", mass1, se=se1, n=args.n, seed=args.seed,
                    verdict=bool(within)))
    rows.append(Row(scenario, "mass_factor", mass1 / mass0 if mass0 else math.nan,
                    seed=args.seed, verdict=bool(within)))
    out.add_rows(rows)
    return rows


def run_heavy_tail(args, out: Output):
    sizes = [int(float(s)) for s in args.sizes.split(",")]
    seeds = [args.seed + k for k in range(args.seeds)]
    if args.control:
        sampler = IidWalk(step_mean=args.control_mean)
        scenario = f"heavy-tail/{sampler.label()}"
        table = running_mean_table(sampler, sizes, seeds)
        limit = 1.0 + args.control_mean
        rows = []
        for seed, means in table.items():
            for n, mval in zip(sorted(sizes), means):
                rows.append(Row(scenario, f"running_mean[n={n}]", mval, n=n, seed=seed))
            se = math.sqrt(args.control_mean / sizes[-1])  # Poisson steps
            ok = abs(means[-1] - limit) <= 3.0 * se
            rows.append(Row(scenario, "limit_gap", abs(means[-1] - limit), se=se,
                            n=sizes[-1], seed=seed, verdict=bool(ok)))
    else:
        sampler = HeavyTailWalk(alpha=args.alpha)
        scenario = f"heavy-tail/{sampler.label()}"
        table = running_mean_table(sampler, sizes, seeds)
        rows = []
        for seed, means in table.items():
            for n, mval in zip(sorted(sizes), means):
                rows.append(Row(scenario, f"running_mean[n={n}]", mval, n=n, seed=seed))
        ok, hits = divergence_gate(table, factor=args.growth_factor,
                                   min_hits=args.min_hits)
        rows.append(Row(scenario, "growth_gate_hits", hits, n=sizes[-1],
                        seed=args.seed, verdict=bool(ok)))
    out.add_rows(rows)
    out.add_report(scenario, {"table": {str(k): v for k, v in table.items()},
                              "sizes": sorted(sizes)})
    if out.figures:
        ref = (1.0 + args.control_mean) if args.control else None
        plots.save_running_means(table, sorted(sizes),
                                 out.figure_path(_slug(scenario) + ".png"),
                                 reference=ref, title=scenario)
    return rows


def run_ergodic(args, out: Output):
    field = parse_field_spec(args.field)
    window_sizes = [float(w) for w in args.windows.split(",")]
    scenario = f"ergodic/lattice+{field.label()}"
    domain = real_line()

    def make_config(w_size, replica):
        window = domain.centered_window(w_size)
        config = sample_lattice_palm(window)
        if not isinstance(field, ZeroField):
            table = sample_field(field, domain, config.locations,
                                 substream(args.seed, scenario, w_size, "field", replica))
            config = perturb(config, table)
        above = config.locations[config.locations > 0]
        t = substream(args.seed, scenario, w_size, "invert", replica).uniform(0.0, float(above[0]))
        return translate(config, t)

    decay = ergodic_average_decay(make_config, ERGODIC_FUNCTIONAL,
                                  window_sizes, args.replicas,
                                  grid_step=args.grid_step)
    rows = []
    for w_size, var, mean in decay:
        rows.append(Row(scenario, f"shift_average_var[W={w_size:g}]", var,
                        n=args.replicas, seed=args.seed))
        rows.append(Row(scenario, f"shift_average_mean[W={w_size:g}]", mean,
                        n=args.replicas, seed=args.seed))
    halved = decay[-1][1] <= decay[0][1] / 2.0
    rows.append(Row(scenario, "variance_halved", float(halved),
                    n=args.replicas, seed=args.seed, verdict=bool(halved)))
    out.add_rows(rows)
    out.add_report(scenario, {"decay": [[w, v, mn] for w, v, mn in decay]})
    if out.figures:
        plots.save_decay_curve(decay, out.figure_path(_slug(scenario) + ".png"),
                               title=scenario)
    return rows


def run_lemma(args, out: Output):
    passed, worst = lemma_identity_check(args.cases, args.seed)
    rows = [Row("lemma", "identity_worst_error", worst, n=args.cases,
                seed=args.seed, verdict=bool(passed))]
    out.add_rows(rows)
    return rows


def run_negative_control(args, out: Output):
    scenario = "mecke/shifted-lattice-control"
    window = real_line().centered_window(args.window)
    items = []
    for i in range(args.n):
        rng = substream(args.seed, scenario, "palm", i)
        items.append((shifted_lattice_pseudo_palm(window, rng), 1.0))
    batch = SampleBatch(BatchRole.PALM, tuple(items), meta=scenario)
    report = mecke_battery(batch, level=args.level, scenario=scenario, seed=args.seed)
    max_z = report.max_abs_z()
    detected = max_z >= 5.0
    rows = [Row(scenario, "control_max_abs_z", max_z, n=args.n, seed=args.seed,
                verdict=bool(detected and not report.passed))]
    out.add_rows(rows)
    out.add_report(scenario, report)
    return rows


# ---------------------------------------------------------------------------
# The acceptance suite
# ---------------------------------------------------------------------------

def run_all(args, out: Output):
    quick = args.quick
    n = 1000 if quick else DEFAULT_N
    replicas = 50 if quick else 200
    if quick:
        print(f"quick mode: n={n}, replicas={replicas} (reduced-scale verdicts)")
        out.add_rows([Row("suite", "quick_mode", 1.0, n=n, seed=args.seed)])

    def sub(**overrides):
        base = dict(
            palm="lattice", lam=2.0, gap="gamma:2,0.5", field=None,
            window=args.window, n=n, seed=args.seed, level=args.level,
            merge_tol=args.merge_tol, deterministic=args.deterministic,
            offsets="0,0.37,2.61", bin="0,1",
            save_batch=None, order=12, sizes="1e3,1e4,1e5", seeds=5,
            alpha=0.8, control=False, control_mean=2.0, growth_factor=5.0,
            min_hits=4, windows="64,256", replicas=replicas, cases=100,
            grid_step=0.5,
        )
        base.update(overrides)
        return argparse.Namespace(**base)

    units = []
    for palm in ("lattice", "poisson", "renewal"):
        for sigma in (0.1, 0.5):
            units.append(("mecke", run_mecke,
                          sub(palm=palm, field=f"brownian:sigma={sigma}")))
    units.append(("control", run_negative_control, sub()))
    units.append(("compact", run_compact, sub(field="negation:mass=2")))
    units.append(("compact-random", run_compact, sub(field="uniform:mass=2")))
    units.append(("collisions", run_collisions, sub(field="brownian:sigma=0.5")))
    units.append(("invert-plain", run_invert, sub(palm="poisson")))
    units.append(("invert-lattice", run_invert, sub()))
    units.append(("invert-perturbed", run_invert, sub(field="brownian:sigma=0.5")))
    units.append(("voronoi-poisson", run_voronoi, sub(palm="poisson")))
    units.append(("voronoi-perturbed", run_voronoi, sub(field="brownian:sigma=0.1")))
    units.append(("heavy-tail", run_heavy_tail, sub(seed=HEAVY_TAIL_FIXTURE_SEEDS[0])))
    units.append(("heavy-tail-control", run_heavy_tail,
                  sub(seed=HEAVY_TAIL_FIXTURE_SEEDS[0], control=True)))
    units.append(("ergodic", run_ergodic, sub(field="brownian:sigma=0.5")))
    units.append(("lemma", run_lemma, sub()))

    # Dispatch to a pool; buffer per-unit outputs and merge in unit order
    # so the CSV is identical no matter the completion order.
    def run_unit(unit):
        _, runner, ns = unit
        local = Output(out.outdir, out.figures)
        runner(ns, local)
        return local

    workers = max(1, min(thread_count(), len(units)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        locals_ = list(pool.map(run_unit, units))
    for local in locals_:
        out.rows.extend(local.rows)
        out.reports.update(local.reports)
    return out.rows


def _slug(scenario: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in scenario)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="palmforge",
        description="Monte Carlo laboratory for Palm calculus: perturbation, "
                    "inversion, and statistical certification of Palm batches.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n=DEFAULT_N):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--n", type=int, default=n)
        p.add_argument("--window", type=float, default=DEFAULT_WINDOW,
                       help="simulation window radius")
        p.add_argument("--level", type=float, default=DEFAULT_LEVEL)
        p.add_argument("--merge-tol", dest="merge_tol", type=float, default=MERGE_TOL,
                       help="real-line atom merge tolerance")
        p.add_argument("--outdir", type=Path, default=Path("palmforge-out"))
        p.add_argument("--deterministic", action="store_true",
                       help="suppress the timestamp header for byte-stable output")
        p.add_argument("--no-figures", action="store_true")
        p.add_argument("--scenario", type=Path, default=None,
                       help="flat key=value scenario file supplying defaults")

    def palm_flags(p):
        p.add_argument("--palm", default="lattice",
                       choices=("lattice", "poisson", "renewal"))
        p.add_argument("--lam", type=float, default=2.0, help="rate for poisson")
        p.add_argument("--gap", default="gamma:2,0.5",
                       help="gap distribution for renewal (gamma:k,theta | exp:rate | fixed:v)")

    p = sub.add_parser("mecke", help="run the invariance battery on a Palm batch")
    common(p)
    palm_flags(p)
    p.add_argument("--field", default=None, help="field spec, e.g. brownian:sigma=0.5")
    p.set_defaults(runner=run_mecke)

    p = sub.add_parser("control", help="negative control: the verifier must reject")
    common(p)
    p.set_defaults(runner=run_negative_control)

    p = sub.add_parser("invert", help="length-biased inversion plus stationarity test")
    common(p)
    palm_flags(p)
    p.add_argument("--field", default=None)
    p.add_argument("--offsets", default="0,0.37,2.61")
    p.add_argument("--bin", default="0,1", help="bin as lo,hi (half-open)")
    p.add_argument("--save-batch", type=Path, default=None,
                   help="write the stationary batch as JSON lines")
    p.set_defaults(runner=run_invert)

    p = sub.add_parser("voronoi", help="zero-cell mass estimate and cross-check")
    common(p)
    palm_flags(p)
    p.add_argument("--field", default=None)
    p.set_defaults(runner=run_voronoi)

    p = sub.add_parser("collisions", help="simplicity audit of perturbed batches")
    common(p)
    p.add_argument("--lam", type=float, default=2.0)
    p.add_argument("--field", default="brownian:sigma=0.5")
    p.set_defaults(runner=run_collisions)

    p = sub.add_parser("compact", help="cyclic-group fixture and mass product")
    common(p)
    p.add_argument("--order", type=int, default=12)
    p.add_argument("--field", default="negation")
    p.set_defaults(runner=run_compact)

    p = sub.add_parser("heavy-tail", help="infinite-mass growth demonstration")
    common(p, n=0)
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--sizes", default="1e3,1e4,1e5")
    p.add_argument("--seeds", type=int, default=5, help="number of consecutive seeds")
    p.add_argument("--control", action="store_true",
                   help="finite-mean walk instead of the heavy-tail walk")
    p.add_argument("--control-mean", dest="control_mean", type=float, default=2.0)
    p.add_argument("--growth-factor", dest="growth_factor", type=float, default=5.0)
    p.add_argument("--min-hits", dest="min_hits", type=int, default=4)
    p.set_defaults(runner=run_heavy_tail, seed=HEAVY_TAIL_FIXTURE_SEEDS[0])

    p = sub.add_parser("ergodic", help="window-average variance decay diagnostic")
    common(p)
    p.add_argument("--field", default="brownian:sigma=0.5")
    p.add_argument("--windows", default="64,256")
    p.add_argument("--replicas", type=int, default=200)
    p.add_argument("--grid-step", dest="grid_step", type=float, default=0.5)
    p.set_defaults(runner=run_ergodic)

    p = sub.add_parser("lemma", help="exact deterministic identity checks")
    common(p)
    p.add_argument("--cases", type=int, default=100)
    p.set_defaults(runner=run_lemma)

    p = sub.add_parser("all", help="the full certification suite")
    common(p)
    p.add_argument("--quick", action="store_true",
                   help="reduced scale (n=1e3) for a fast end-to-end run")
    p.set_defaults(runner=run_all)

    return parser


def _apply_scenario_file(args, argv):
    """Scenario files supply defaults; explicit flags win."""
    values = parse_scenario_file(args.scenario)
    flag_map = {"window": "window", "n": "n", "seed": "seed", "level": "level",
                "palm": "palm", "lam": "lam", "gap": "gap", "field": "field",
                "offsets": "offsets", "bin": "bin", "alpha": "alpha",
                "sizes": "sizes", "seeds": "seeds", "windows": "windows",
                "replicas": "replicas", "cases": "cases", "order": "order",
                "merge-tol": "merge_tol", "quick": "quick", "id": None}
    explicit = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
    for key, value in values.items():
        dest = flag_map[key]
        if dest is None or not hasattr(args, dest):
            continue
        if f"--{key}" in explicit:
            continue
        current = getattr(args, dest)
        caster = type(current) if current is not None else str
        if caster is bool:
            setattr(args, dest, value.lower() in ("1", "true", "yes"))
        else:
            setattr(args, dest, caster(value))
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "scenario", None):
        try:
            args = _apply_scenario_file(args, argv)
        except (ScenarioKeyError, OSError) as exc:
            print(f"scenario error: {exc}", file=sys.stderr)
            return 2
    out = Output(args.outdir, figures=not args.no_figures)
    try:
        args.runner(args, out)
    except GateError as exc:
        print(f"gate failure: {exc}", file=sys.stderr)
        return 3
    except PalmForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return out.finalize(args.deterministic)


if __name__ == "__main__":
    sys.exit(main())
