"""Command-line interface.

Three subcommands drive the library from JSON config files:

- ``mbcrb bound --config cfg.json --out DIR`` writes every closed-form
  bound matrix as CSV plus a scalar summary.
- ``mbcrb run --config cfg.json --out DIR [--trials K] [--seed S]
  [--workers W]`` runs the Monte Carlo sweep and writes CSV tables, SVG
  plots, and a reproducibility manifest.
- ``mbcrb pseudotrue --config cfg.json --psi v1 v2 ...`` prints the
  closed-form and numerically minimized pseudotrue parameters side by side.

Exit codes: 0 success, 1 configuration error, 2 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from pathlib import Path

import numpy as np

from .bounds import BoundReport, bound_report, pseudotrue
from .config import ConfigError, config_hash, load_config
from .experiment import AXIS_N, REFERENCE_PSEUDOTRUE, SweepResult, run_sweep
from .linalg import NumericalError
from .pseudotrue_numeric import KlObjectiveSpec, minimize_kl
from .svg_plot import Series, render_line_chart

__all__ = ["main", "cmd_bound", "cmd_run", "cmd_pseudotrue"]


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the config-error code."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_cell(value) -> str:
    return repr(float(value))


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


class _OutputDir:
    """Tracks files written by one command so failures leave no partial output."""

    def __init__(self, out_dir):
        self.path = Path(out_dir)
        self.path.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def write_text(self, name: str, text: str) -> Path:
        target = self.path / name
        target.write_text(text, encoding="utf-8")
        self.written.append(target)
        return target

    def cleanup(self) -> None:
        for target in self.written:
            target.unlink(missing_ok=True)


def _matrix_rows(name: str, mat: np.ndarray) -> list[list[str]]:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    return [[name, str(i), str(j), _float_cell(mat[i, j])]
            for i in range(mat.shape[0]) for j in range(mat.shape[1])]


def _bound_summary(report: BoundReport) -> str:
    lines = [
        f"n_samples: {report.n_samples}",
        f"diag bcrb: {np.diag(report.bcrb).tolist()}",
        f"diag mbcrb: {np.diag(report.mbcrb).tolist()}",
        f"trace bcrb: {report.trace_bcrb!r}",
        f"trace mbcrb: {report.trace_mbcrb!r}",
        f"rmse floor about pseudotrue: {report.rmse_floor_pseudotrue!r}",
    ]
    if report.biased_bound is not None:
        lines += [
            f"diag biased bound: {np.diag(report.biased_bound).tolist()}",
            f"trace biased bound: {report.trace_biased_bound!r}",
            f"rmse floor about true parameter: {report.rmse_floor_true!r}",
        ]
    return "\n".join(lines) + "\n"


def cmd_bound(config_path, out_dir) -> int:
    """Compute every closed-form bound for the configured pair."""
    config = load_config(config_path)
    report = bound_report(config.pair)
    out = _OutputDir(out_dir)
    try:
        rows = _matrix_rows("pseudotrue_gain", report.pseudotrue_gain)
        rows += _matrix_rows("pseudotrue_offset",
                             report.pseudotrue_offset[:, None])
        rows += _matrix_rows("bcrb", report.bcrb)
        rows += _matrix_rows("mbcrb", report.mbcrb)
        if report.biased_bound is not None:
            rows += _matrix_rows("biased_bound", report.biased_bound)
        rows += _matrix_rows("map_error_covariance", report.map_error_covariance)
        out.write_text("bounds.csv",
                       _csv_text(["quantity", "row", "col", "value"], rows))
        summary = _bound_summary(report)
        out.write_text("bounds_summary.txt", summary)
    except Exception:
        out.cleanup()
        raise
    sys.stdout.write(summary)
    sys.stdout.write(f"wrote {out.path / 'bounds.csv'}\n")
    return 0


def _sweep_csv(results: list[SweepResult], axis: str, floor_column: str) -> str:
    header = ["axis_value", "component_index", "rmse", "rmse_stderr",
              floor_column, "bcrb_floor"]
    rows = []
    for result in results:
        axis_cell = (str(int(result.axis_value)) if axis == AXIS_N
                     else _float_cell(result.axis_value))
        n_theta = result.rmse.shape[0]
        for k in range(n_theta):
            bcrb_cell = (_float_cell(result.bcrb_floor[k])
                         if k < result.bcrb_floor.shape[0] else "nan")
            rows.append([axis_cell, str(k), _float_cell(result.rmse[k]),
                         _float_cell(result.rmse_standard_error[k]),
                         _float_cell(result.bound_rmse_floor[k]), bcrb_cell])
    return _csv_text(header, rows)


def _trace_csv(results: list[SweepResult], axis: str) -> str:
    header = ["axis_value", "trace_rmse", "trace_rmse_stderr"]
    rows = []
    for result in results:
        axis_cell = (str(int(result.axis_value)) if axis == AXIS_N
                     else _float_cell(result.axis_value))
        rows.append([axis_cell, _float_cell(result.trace_rmse),
                     _float_cell(result.trace_rmse_standard_error)])
    return _csv_text(header, rows)


def _component_svg(results: list[SweepResult], component: int, axis: str,
                   floor_label: str) -> str:
    xs = tuple(r.axis_value for r in results)
    series = [
        Series(label="RMSE", x=xs,
               y=tuple(float(r.rmse[component]) for r in results)),
        Series(label=floor_label, x=xs, dashed=True,
               y=tuple(float(r.bound_rmse_floor[component]) for r in results)),
    ]
    if all(component < r.bcrb_floor.shape[0] for r in results):
        series.append(Series(
            label="BCRB floor", x=xs, dashed=True,
            y=tuple(float(r.bcrb_floor[component]) for r in results)))
    return render_line_chart(series, title=f"Component {component}",
                             x_label=axis, y_label="RMSE")


def cmd_run(config_path, out_dir, trials=None, seed=None, workers=1) -> int:
    """Run the configured sweep and write CSV, SVG, and manifest outputs."""
    config = load_config(config_path)
    if trials is not None or seed is not None:
        try:
            config = dataclasses.replace(
                config,
                trials=config.trials if trials is None else trials,
                master_seed=config.master_seed if seed is None else seed)
        except ValueError as exc:
            raise ConfigError(f"experiment: {exc}") from None

    results = run_sweep(config, workers=workers)
    floor_column = ("mbcrb_floor" if config.error_reference == REFERENCE_PSEUDOTRUE
                    else "biased_bound_floor")
    floor_label = ("MBCRB floor" if config.error_reference == REFERENCE_PSEUDOTRUE
                   else "biased bound floor")

    out = _OutputDir(out_dir)
    try:
        out.write_text("sweep.csv",
                       _sweep_csv(results, config.sweep.axis, floor_column))
        out.write_text("sweep_trace.csv", _trace_csv(results, config.sweep.axis))
        svg_names = []
        for component in range(config.pair.n_theta):
            name = f"rmse_component_{component}.svg"
            out.write_text(name, _component_svg(results, component,
                                                config.sweep.axis, floor_label))
            svg_names.append(name)
        manifest = {
            "config_hash": config_hash(config),
            "master_seed": config.master_seed,
            "trials": config.trials,
            "error_reference": config.error_reference,
            "sweep_axis": config.sweep.axis,
            "grid": list(config.sweep.grid),
            "outputs": ["sweep.csv", "sweep_trace.csv"] + svg_names,
        }
        out.write_text("run_manifest.json",
                       json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except Exception:
        out.cleanup()
        raise
    sys.stdout.write(f"wrote {len(out.written)} files to {out.path}\n")
    return 0


def cmd_pseudotrue(config_path, psi_values, out_dir=None) -> int:
    """Print closed-form and KL-minimized pseudotrue parameters side by side."""
    config = load_config(config_path)
    pair = config.pair
    psi = np.asarray([float(v) for v in psi_values], dtype=float)
    if psi.shape != (pair.n_psi,):
        raise ConfigError(
            f"psi: expected {pair.n_psi} values, got {psi.shape[0]}")

    closed = pseudotrue(pair, psi)
    spec = KlObjectiveSpec(pair=pair, psi=psi)
    result = minimize_kl(spec, np.zeros(pair.n_theta))
    if not result.converged:
        raise NumericalError(
            f"KL minimization did not converge (gradient norm "
            f"{result.gradient_norm:.3e} after {result.iterations} iterations)")
    numeric = result.minimizer
    difference = float(np.max(np.abs(closed - numeric)))

    lines = ["component,closed_form,numeric"]
    for k in range(pair.n_theta):
        lines.append(f"{k},{_float_cell(closed[k])},{_float_cell(numeric[k])}")
    table = "\n".join(lines) + "\n"
    sys.stdout.write(table)
    sys.stdout.write(f"max abs difference: {difference!r}\n")

    if out_dir is not None:
        out = _OutputDir(out_dir)
        rows = [[str(k), _float_cell(closed[k]), _float_cell(numeric[k])]
                for k in range(pair.n_theta)]
        out.write_text("pseudotrue.csv",
                       _csv_text(["component", "closed_form", "numeric"], rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mbcrb",
                     description="Misspecified Bayesian Cramer-Rao bounds "
                                 "and Monte Carlo validation")
    sub = parser.add_subparsers(dest="command", required=True)

    bound = sub.add_parser("bound", help="write closed-form bound matrices")
    bound.add_argument("--config", required=True, help="JSON config file")
    bound.add_argument("--out", required=True, help="output directory")

    run = sub.add_parser("run", help="run the Monte Carlo sweep")
    run.add_argument("--config", required=True, help="JSON config file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--trials", type=int, default=None,
                     help="override the configured trial count")
    run.add_argument("--seed", type=int, default=None,
                     help="override the configured master seed")
    run.add_argument("--workers", type=int, default=1,
                     help="worker threads (results are identical for any count)")

    pseudo = sub.add_parser("pseudotrue",
                            help="closed-form vs numeric pseudotrue parameter")
    pseudo.add_argument("--config", required=True, help="JSON config file")
    pseudo.add_argument("--psi", required=True, nargs="+", type=float,
                        help="true parameter value, one number per component")
    pseudo.add_argument("--out", default=None,
                        help="optional output directory for the CSV table")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "bound":
            return cmd_bound(args.config, args.out)
        if args.command == "run":
            return cmd_run(args.config, args.out, trials=args.trials,
                           seed=args.seed, workers=args.workers)
        return cmd_pseudotrue(args.config, args.psi, out_dir=args.out)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1
    except NumericalError as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
