"""Command-line front end: figure-grade tables from a config file.

Commands:
  cell-probs  per-offset cell detection probabilities over the beta grid
  roc         analytic global ROC columns per configured width
  simulate    roc plus Monte Carlo estimates and Wilson intervals
  validate    the self-contained cross-check suite

Flag values override the config file; whatever neither sets falls back to
the documented defaults.  Exit codes: 0 success, 1 validation failure,
2 config error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import tempfile
from dataclasses import replace

from .analytic import (
    SearchOrder,
    SearchPolicy,
    cell_pdet,
    cell_pdet_exact,
    cell_pfa,
    expected_noncentrality,
    l_max_param,
    roc_curve,
)
from .config import ConfigError, ExperimentConfig, load_config
from .prncode import CODE_LENGTH
from .simulator import Fidelity, SimConfig, monte_carlo_sweep
from .validate import CheckStatus, run_validation

_ROC_HEADER = [
    "width_hz", "m", "beta", "p_fa_cell",
    "p_det_cell_l0", "p_det_cell_l1", "p_det_cell_l2",
    "p_det_cell_l0_exact", "p_det_cell_l1_exact", "p_det_cell_l2_exact",
    "p_fa_global", "p_det_naive", "p_det_code_first", "p_det_doppler_first",
    "p_det_approx",
]
_MC_HEADER = ["p_det_mc", "p_fa_mc", "ci_low", "ci_high", "trials"]
_CELL_HEADER = [
    "width_hz", "wt", "offset_l", "beta",
    "p_fa_cell", "p_det_expected", "p_det_exact", "p_det_reference",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.10g}"


def _write_csv(path: str, header: list[str], rows) -> None:
    """Write through a sibling temp file and rename, so readers never see a
    half-written table."""
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), suffix=".csv.tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _roc_row(width: float, m: int, point) -> list:
    return [
        width, m, point.beta, point.p_fa_cell,
        point.p_det_cell_l0, point.p_det_cell_l1, point.p_det_cell_l2,
        point.p_det_cell_l0_exact, point.p_det_cell_l1_exact,
        point.p_det_cell_l2_exact,
        point.p_fa_global, point.p_det_naive, point.p_det_code_first,
        point.p_det_doppler_first, point.p_det_approx,
    ]


def _cmd_cell_probs(config: ExperimentConfig, out: str) -> int:
    params = config.params()
    lm = l_max_param(params)
    betas = config.beta_grid.thresholds()
    rows = []
    for width in config.bin_widths_hz:
        grid = config.grid(width)
        for l in range(3):
            el = expected_noncentrality(params, grid, l)
            for beta in betas:
                b = float(beta)
                # the reference column carries the loss-free bound: the
                # perfectly centered cell for l = 0, plain noise beyond
                reference = cell_pdet(lm, b) if l == 0 else cell_pfa(b)
                rows.append([
                    width, grid.relative_width, l, b,
                    cell_pfa(b), cell_pdet(el, b),
                    cell_pdet_exact(params, grid, l, b), reference,
                ])
    _write_csv(out, _CELL_HEADER, rows)
    print(f"cell-probs: {len(rows)} rows -> {out}")
    return 0


def _cmd_roc(config: ExperimentConfig, out: str) -> int:
    params = config.params()
    betas = config.beta_grid.thresholds()
    rows = []
    for width in config.bin_widths_hz:
        grid = config.grid(width)
        m = config.m_for(width)
        curve = roc_curve(params, grid, SearchPolicy(config.order, m), betas,
                          n_phases=CODE_LENGTH, l_max=config.lmax)
        rows.extend(_roc_row(width, m, p) for p in curve.points)
    _write_csv(out, _ROC_HEADER, rows)
    print(f"roc: {len(rows)} rows -> {out}")
    return 0


def _cmd_simulate(config: ExperimentConfig, out: str, workers: int) -> int:
    params = config.params()
    betas = config.beta_grid.thresholds()
    rows = []
    for width in config.bin_widths_hz:
        grid = config.grid(width)
        m = config.m_for(width)
        curve = roc_curve(params, grid, SearchPolicy(config.order, m), betas,
                          n_phases=CODE_LENGTH, l_max=config.lmax)
        sim = SimConfig(trials=int(config.trials), seed=int(config.seed),
                        fidelity=config.fidelity, params=params, grid=grid,
                        policy=SearchPolicy(config.order, m), l_max=config.lmax)
        estimates = monte_carlo_sweep(sim, betas, workers=workers)
        for point, est in zip(curve.points, estimates):
            merged = replace(point, p_det_mc=est.p_det, p_fa_mc=est.p_fa,
                             ci_low=est.p_det_ci[0], ci_high=est.p_det_ci[1],
                             trials=est.trials)
            rows.append(_roc_row(width, m, merged)
                        + [merged.p_det_mc, merged.p_fa_mc, merged.ci_low,
                           merged.ci_high, merged.trials])
    _write_csv(out, _ROC_HEADER + _MC_HEADER, rows)
    print(f"simulate: {len(rows)} rows ({config.fidelity.value}, "
          f"{config.trials} trials/width) -> {out}")
    return 0


def _cmd_validate(config: ExperimentConfig) -> int:
    results = run_validation(config)
    failed = False
    for res in results:
        print(res.line())
        failed = failed or res.status is CheckStatus.FAIL
    print("validate:", "FAIL" if failed else "OK",
          f"({len(results)} checks)")
    return 1 if failed else 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acqroc",
        description="Doppler bin width vs acquisition performance toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("cell-probs", "emit per-offset cell detection probability tables"),
            ("roc", "emit analytic global ROC tables"),
            ("simulate", "emit ROC tables with Monte Carlo estimates"),
            ("validate", "run the cross-check suite")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON experiment file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--trials", type=int, default=None, help="override config trials")
        p.add_argument("--fidelity", choices=[f.value for f in Fidelity], default=None,
                       help="override config fidelity")
        p.add_argument("--order", choices=[o.value for o in SearchOrder], default=None,
                       help="override config search order")
        if name != "validate":
            p.add_argument("--out", default=f"{name}.csv", help="output CSV path")
        if name == "simulate":
            p.add_argument("--workers", type=int, default=1,
                           help="worker threads (results are identical for any count)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.trials is not None:
            overrides["trials"] = args.trials
        if args.fidelity is not None:
            overrides["fidelity"] = Fidelity(args.fidelity)
        if args.order is not None:
            overrides["order"] = SearchOrder(args.order)
        if overrides:
            config = replace(config, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "cell-probs":
        return _cmd_cell_probs(config, args.out)
    if args.command == "roc":
        return _cmd_roc(config, args.out)
    if args.command == "simulate":
        if args.workers < 1:
            print("config error: --workers must be >= 1", file=sys.stderr)
            return 2
        return _cmd_simulate(config, args.out, args.workers)
    return _cmd_validate(config)


if __name__ == "__main__":
    sys.exit(main())
