"""Command-line front end: glasschain {exact,average,check1,check2,curve,scan,explore}."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from glasschain import chain, disorder, explorer, inequalities
from glasschain.inequalities import Verdict
from glasschain.modelfile import ModelFileError, dump_model, read_model

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, EXIT_ZERO = 0, 1, 2, 3
DEFAULT_SAMPLES = 100_000


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.15g}"
    return str(x)


def parse_floats(text: str, field: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{field}: expected comma-separated numbers, got {text!r}") from None


def parse_grid(text: str, field: str) -> list[float]:
    """'start:stop:num' (inclusive linspace) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        try:
            start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        except (ValueError, IndexError):
            raise UsageError(f"{field}: expected start:stop:num, got {text!r}") from None
        if len(parts) != 3 or num < 1:
            raise UsageError(f"{field}: expected start:stop:num with num >= 1, got {text!r}")
        return [float(x) for x in np.linspace(start, stop, num)]
    values = parse_floats(text, field)
    if not values:
        raise UsageError(f"{field}: empty grid")
    return values


def default_workers() -> int:
    env = os.environ.get("GLASSCHAIN_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"GLASSCHAIN_WORKERS: expected an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    couplings: str | None = None
    magnitudes: str | None = None
    h: int = 1
    k: int = 2
    l: int = 1
    grid: str | None = None
    alpha_grid: str = "0:1:21"
    seed: int | None = None
    samples: int = DEFAULT_SAMPLES
    output: str | None = None
    tolerance: float | None = None
    workers: int | None = None
    dump_model: str | None = None
    free: bool = False
    brute_force: bool = False
    search: str = "all"


def _load(cfg: RunConfig):
    if cfg.model is None:
        raise UsageError("--model: required")
    try:
        model, seed = read_model(cfg.model)
    except OSError as exc:
        raise UsageError(f"--model: cannot read {cfg.model}: {exc.strerror}") from None
    except ModelFileError as exc:
        raise UsageError(f"--model: {exc}") from None
    seed = cfg.seed if cfg.seed is not None else seed
    if cfg.dump_model:
        Path(cfg.dump_model).write_text(dump_model(model, seed), encoding="utf-8")
    return model, seed


def _magnitudes(cfg: RunConfig) -> list[float]:
    if cfg.magnitudes is not None:
        return parse_floats(cfg.magnitudes, "--magnitudes")
    model, _ = _load(cfg)
    if not model.all_kind(disorder.LawKind.bernoulli):
        raise UsageError("--model: magnitudes can only be taken from an all-bernoulli model")
    return [law.magnitude for law in model.laws]


def _open_out(cfg: RunConfig):
    if cfg.output:
        return open(cfg.output, "w", newline="", encoding="utf-8")
    return None


def _writer(fh):
    return csv.writer(fh or sys.stdout, lineterminator="\n")


def _rel_tol(cfg: RunConfig) -> float:
    return inequalities.REL_TOL if cfg.tolerance is None else cfg.tolerance


def cmd_exact(cfg: RunConfig) -> int:
    if cfg.couplings is None:
        raise UsageError("--J: required")
    j = parse_floats(cfg.couplings, "--J")
    if cfg.free:
        report = chain.free_boundary_observables(j)
    else:
        c = chain.CouplingVector(tuple(j))
        report = (chain.brute_force_observables(c, workers=cfg.workers) if cfg.brute_force
                  else chain.closed_form_observables(c))
    fh = _open_out(cfg)
    w = _writer(fh)
    w.writerow(["quantity", "h", "k", "value", "method"])
    for q, h, k, v in report.rows():
        w.writerow([q, h, k, fmt(v), report.method.value])
    if fh:
        fh.close()
    return EXIT_OK


def _needs_seed(model, seed):
    if not model.is_discrete and seed is None:
        raise UsageError("--seed: required for continuous models (or set seed in the model file)")


def cmd_average(cfg: RunConfig) -> int:
    model, seed = _load(cfg)
    chain.check_pair(cfg.h, cfg.k, model.n)
    _needs_seed(model, seed)
    w = _writer(None)
    w.writerow(["quantity", "h", "k", "value", "stderr"])
    for name, f, k in (("J_h*omega_h", disorder.BondEnergy(cfg.h), ""),
                       ("J_h*J_k*truncated", disorder.TruncatedEnergy(cfg.h, cfg.k), cfg.k)):
        if model.is_discrete:
            value, err = disorder.quenched_average(model, f, workers=cfg.workers), 0.0
        else:
            value, err = disorder.monte_carlo_average(model, f, cfg.samples, seed,
                                                      workers=cfg.workers)
        w.writerow([name, cfg.h, k, fmt(value), fmt(err)])
    return EXIT_OK


def _report_verdict(name: str, v, expected: Verdict, h, k="") -> int:
    w = _writer(None)
    w.writerow(["check", "h", "k", "value", "tolerance", "verdict", "classes"])
    w.writerow([name, h, k, fmt(v.value), fmt(v.tolerance), v.verdict.value,
                " ".join(v.context.get("classes", []))])
    if "hypotheses" in v.context:
        held = [key for key, ok in v.context["hypotheses"].items() if ok]
        print(f"# hypotheses holding: {' '.join(held) if held else 'none'}")
    if v.verdict is Verdict.zero:
        return EXIT_ZERO
    return EXIT_OK if v.verdict is expected else EXIT_VIOLATION


def cmd_check1(cfg: RunConfig) -> int:
    model, seed = _load(cfg)
    _needs_seed(model, seed)
    chain.check_bond(cfg.h, model.n)
    v = inequalities.check_first_inequality(model, cfg.h, rel_tol=_rel_tol(cfg),
                                            n_samples=cfg.samples, seed=seed, workers=cfg.workers)
    return _report_verdict("first", v, Verdict.positive, cfg.h)


def cmd_check2(cfg: RunConfig) -> int:
    model, seed = _load(cfg)
    _needs_seed(model, seed)
    chain.check_pair(cfg.h, cfg.k, model.n)
    v = inequalities.check_second_inequality(model, cfg.h, cfg.k, rel_tol=_rel_tol(cfg),
                                             n_samples=cfg.samples, seed=seed,
                                             workers=cfg.workers)
    return _report_verdict("second", v, Verdict.negative, cfg.h, cfg.k)


def cmd_curve(cfg: RunConfig) -> int:
    mags = _magnitudes(cfg)
    if cfg.grid is None:
        raise UsageError("--grid: required")
    chain.check_bond(cfg.l, len(mags))
    points = inequalities.critical_alpha_curve(mags, cfg.l, parse_grid(cfg.grid, "--grid"))
    fh = _open_out(cfg)
    w = _writer(fh)
    w.writerow(["j_l", "alpha_star"])
    for p in points:
        w.writerow([fmt(p.j_l), fmt(p.alpha_star)])
    if fh:
        fh.close()
    return EXIT_OK


def cmd_scan(cfg: RunConfig) -> int:
    mags = _magnitudes(cfg)
    chain.check_pair(cfg.h, cfg.k, len(mags))
    grid = parse_grid(cfg.alpha_grid, "--alpha-grid")
    if any(not 0 <= a <= 1 for a in grid):
        raise UsageError("--alpha-grid: values must lie in [0, 1]")
    rows = inequalities.scan_alpha(mags, grid, cfg.h, cfg.k, rel_tol=_rel_tol(cfg))
    fh = _open_out(cfg)
    w = _writer(fh)
    w.writerow(["alpha", "average", "g", "verdict"])
    for a, avg, g, v in rows:
        w.writerow([fmt(a), fmt(avg), fmt(g), v.value])
    if fh:
        fh.close()
    return EXIT_OK


def cmd_explore(cfg: RunConfig) -> int:
    if cfg.output is None:
        raise UsageError("--output: required (JSON-lines file)")
    workers = cfg.workers
    if cfg.search == "all":
        scans = explorer.default_scans(workers)
    elif cfg.search == "control":
        scans = [explorer.chain_control_scan(workers=workers)]
    elif cfg.search == "asymmetric":
        scans = [explorer.search_asymmetric_violation(workers=workers)]
    else:
        scans = [explorer.search_chord_violation(n, chord, workers=workers)
                 for n in explorer.DEFAULT_CHORD_SIZES for chord in explorer.default_chords(n)]
    records = [r for s in scans for r in s.records]
    explorer.write_jsonl(records, cfg.output)
    summaries = [s.summary() for s in scans]
    summary_path = cfg.output + ".summary.json"
    Path(summary_path).write_text(json.dumps(summaries, indent=1) + "\n", encoding="utf-8")
    w = _writer(None)
    w.writerow(["scan", "grid_points", "pairs_checked", "violations", "max_value",
                "none_found_in_grid"])
    for s in summaries:
        w.writerow([s["scan"], s["grid_points"], s["pairs_checked"], s["violations"],
                    fmt(s["max_value"]), s["none_found_in_grid"]])
    return EXIT_OK


COMMANDS = {
    "exact": cmd_exact,
    "average": cmd_average,
    "check1": cmd_check1,
    "check2": cmd_check2,
    "curve": cmd_curve,
    "scan": cmd_scan,
    "explore": cmd_explore,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    if cfg.workers is None:
        cfg.workers = default_workers()
    if cfg.workers < 1:
        raise UsageError("--workers: must be >= 1")
    try:
        return COMMANDS[cfg.command](cfg)
    except (IndexError, TypeError) as exc:
        raise UsageError(f"index: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="glasschain", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True):
        sp.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: $GLASSCHAIN_WORKERS or CPU count)")
        if model:
            sp.add_argument("--model", help="model file")
            sp.add_argument("--dump-model", dest="dump_model",
                            help="write the parsed model back out in canonical form")
            sp.add_argument("--seed", type=int, default=None)
            sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                            help="Monte Carlo sample pairs for continuous laws")

    sp = sub.add_parser("exact", help="observables of one coupling realization")
    sp.add_argument("--J", dest="couplings", required=True, help="comma-separated couplings")
    sp.add_argument("--free", action="store_true", help="open chain instead of periodic")
    sp.add_argument("--brute-force", dest="brute_force", action="store_true")
    sp.add_argument("-o", "--output")
    common(sp, model=False)

    sp = sub.add_parser("average", help="quenched averages of J_h omega_h and the truncated term")
    sp.add_argument("--h", type=int, default=1)
    sp.add_argument("--k", type=int, default=2)
    common(sp)

    sp = sub.add_parser("check1", help="first inequality")
    sp.add_argument("--h", type=int, default=1)
    sp.add_argument("--tolerance", type=float, default=None, help="relative zero band")
    common(sp)

    sp = sub.add_parser("check2", help="second inequality")
    sp.add_argument("--h", type=int, default=1)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--tolerance", type=float, default=None, help="relative zero band")
    common(sp)

    for name, helptext in (("curve", "critical alpha along J^(l)"), ("scan", "alpha-grid scan")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--magnitudes", help="comma-separated J^(i); or use --model")
        sp.add_argument("-o", "--output")
        if name == "curve":
            sp.add_argument("--l", type=int, default=1)
            sp.add_argument("--grid", required=True, help="start:stop:num or list of J^(l)")
        else:
            sp.add_argument("--h", type=int, default=1)
            sp.add_argument("--k", type=int, default=2)
            sp.add_argument("--alpha-grid", dest="alpha_grid", default="0:1:21")
            sp.add_argument("--tolerance", type=float, default=None, help="relative zero band")
        common(sp)

    grids = (
        f"default grids: chord = symmetric +-J ring of {explorer.DEFAULT_CHORD_SIZES} sites plus "
        f"every chord (1, j), ring and chord magnitudes in {explorer.DEFAULT_MAGNITUDES} "
        f"(chord 0 allowed programmatically); asymmetric = rings of {explorer.DEFAULT_ASYM_SIZES} "
        f"sites with the zero-mean law {{+a, -b}}, a, b in {explorer.DEFAULT_ASYM_VALUES}; "
        f"control = plain symmetric rings of {explorer.DEFAULT_CONTROL_SIZES} sites, magnitudes "
        f"{explorer.DEFAULT_MAGNITUDES}. Records go to OUTPUT, per-scan summaries to "
        "OUTPUT.summary.json."
    )
    sp = sub.add_parser("explore", help="counterexample scans, JSON-lines output", epilog=grids)
    sp.add_argument("--search", choices=["all", "chord", "asymmetric", "control"], default="all")
    sp.add_argument("-o", "--output", required=True)
    common(sp, model=False)
    return p


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        return run(RunConfig(**vars(ns)))
    except UsageError as exc:
        print(f"glasschain: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
