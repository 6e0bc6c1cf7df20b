"""Command-line interface.

Subcommands: ``theory`` (one-cell prediction), ``simulate`` (one-cell
finite-size experiment), ``sweep`` (grid from a config file), ``dp``
(adaptive pool-growth run or paired comparison), ``compare``
(theory-vs-experiment report with a figure), ``plot`` (CSV to SVG chart).

Exit codes: 0 success, 1 usage error, 2 numerical-validity error,
3 I/O error.  Diagnostics go to stderr.

The environment variable ``PRUNELAB_OUT_DIR`` redirects relative *output*
paths (and only output paths) to a chosen directory.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from dataclasses import replace

from . import __version__
from .config import load_config
from .practice import DPConfig, compare_adaptive_static, run_dp
from .selection import parse_strategy, strategy_scalars
from .simulate import ExperimentConfig, run_cell
from .spectral import (
    AtThresholdError,
    FixedPointError,
    InvalidPredictionError,
    RegimeParams,
    RidgelessPathError,
    ridgeless_test_error,
    spectral_state,
    theory_test_error,
)
from .sweep import (
    compare_report,
    preset_names,
    preset_specs,
    resolve_strategy,
    run_specs,
    write_csv,
)
from .svgplot import PlotSpec, emit_plot

__all__ = ["main", "entry"]

_ENV_OUT_DIR = "PRUNELAB_OUT_DIR"


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _out_path(path: str | None) -> str | None:
    """Apply the output-directory override to relative output paths."""
    if path is None:
        return None
    out_dir = os.environ.get(_ENV_OUT_DIR)
    if out_dir and not os.path.isabs(path):
        return os.path.join(out_dir, path)
    return path


def _fmt(value: float) -> str:
    return "%.17g" % value


def _strategy_from_args(args) -> object:
    token = resolve_strategy(args.strategy, getattr(args, "xi", None),
                             getattr(args, "p", None), getattr(args, "exponent", None))
    return parse_strategy(token)


def _add_strategy_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--strategy", default="all",
                        help="strategy kind or token: all, kh, ke, sig, kh:xi=1.0, sig:exponent=2.0")
    parser.add_argument("--xi", type=float, default=None, help="threshold for kh/ke")
    parser.add_argument("--p", type=float, default=None,
                        help="keep probability; derives xi for kh/ke, must be 1 for all")
    parser.add_argument("--exponent", type=float, default=None, help="exponent for sig")


def _cmd_theory(args) -> int:
    strategy = _strategy_from_args(args)
    scalars = strategy_scalars(strategy, args.rho)
    params = RegimeParams(phi=args.phi, lam=args.lam, keep_prob=scalars.keep_prob)
    lines = [
        ("strategy", None),
        ("p", scalars.keep_prob),
        ("rho", args.rho),
        ("phi", args.phi),
        ("lambda", args.lam),
        ("gamma", scalars.gamma),
        ("beta", scalars.beta),
        ("beta_tilde", scalars.beta_tilde),
    ]
    print(f"strategy = {args.strategy if ':' in args.strategy else strategy.kind}")
    for key, value in lines[1:]:
        print(f"{key} = {_fmt(value)}")
    if args.lam > 0.0:
        state = spectral_state(params, scalars)
        pred = theory_test_error(params, scalars)
        print(f"m = {_fmt(state.m)}")
        print(f"m_prime = {_fmt(state.m_prime)}")
        print(f"m_tilde = {_fmt(state.m_tilde)}")
    else:
        pred = ridgeless_test_error(scalars, args.phi, scalars.keep_prob)
    print(f"m0 = {_fmt(pred.m0)}")
    print(f"nu0 = {_fmt(pred.nu0)}")
    print(f"test_error = {_fmt(pred.test_error)}")
    print(f"regime = {pred.regime}")
    return 0


def _cmd_simulate(args) -> int:
    strategy = _strategy_from_args(args)
    config = ExperimentConfig(d=args.d, n=args.n, lam=args.lam, strategy=strategy,
                              rho=args.rho, trials=args.trials, seed=args.seed)
    agg = run_cell(config)
    scalars = strategy_scalars(strategy, args.rho)
    print(f"trials = {agg.trials - agg.failures}")
    print(f"failures = {agg.failures}")
    print(f"kept_mean = {_fmt(agg.kept_mean)}")
    print(f"empirical_mean = {_fmt(agg.mean_error)}")
    print(f"empirical_std = {_fmt(agg.std_error)}")
    ok = agg.trials - agg.failures
    if ok > 1:
        print(f"empirical_se = {_fmt(agg.std_error / math.sqrt(ok))}")
    try:
        params = RegimeParams(phi=args.d / args.n, lam=args.lam, keep_prob=scalars.keep_prob)
        if args.lam > 0.0:
            pred = theory_test_error(params, scalars)
        else:
            pred = ridgeless_test_error(scalars, params.phi, scalars.keep_prob)
        print(f"theory_error = {_fmt(pred.test_error)}")
    except (AtThresholdError, InvalidPredictionError, FixedPointError, RidgelessPathError) as exc:
        print(f"theory_error = unavailable ({exc})", file=sys.stderr)
    return 0


def _specs_from_args(args) -> list:
    if getattr(args, "preset", None):
        specs = preset_specs(args.preset)
    else:
        specs = [load_config(args.config)]
    if args.seed is not None:
        specs = [replace(s, base=replace(s.base, seed=args.seed)) for s in specs]
    return specs


def _cmd_sweep(args) -> int:
    specs = _specs_from_args(args)
    rows = run_specs(specs, workers=args.workers)
    csv_path = _out_path(args.out or next((s.csv_path for s in specs if s.csv_path), None))
    if csv_path is None:
        print("error: no CSV output path (give --out or set [outputs] csv)", file=sys.stderr)
        return 1
    write_csv(rows, csv_path)
    print(f"wrote {len(rows)} rows to {csv_path}")
    svg_path = _out_path(next((s.svg_path for s in specs if s.svg_path), None))
    if svg_path:
        spec = PlotSpec(x="n", y="theory_error", series="series_label",
                        title=specs[0].name)
        with open(svg_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(emit_plot(csv_path, spec))
        print(f"wrote plot to {svg_path}")
    return 0


def _cmd_compare(args) -> int:
    specs = _specs_from_args(args)
    for spec in specs:
        if not spec.base.empirics:
            print(f"error: spec {spec.name!r} has empirics disabled; "
                  "compare needs simulated cells", file=sys.stderr)
            return 1
    rows = run_specs(specs, workers=args.workers)
    report = compare_report(rows, z_threshold=args.z)
    stem = args.out or f"{args.preset or specs[0].name}_compare.csv"
    csv_path = _out_path(stem)
    write_csv(rows, csv_path)
    figure_path = _out_path(args.figure or os.path.splitext(stem)[0] + ".png")
    from .figures import save_compare_figure

    save_compare_figure(rows, figure_path)
    print(f"wrote {len(rows)} rows to {csv_path} and figure to {figure_path}")
    print(
        f"cells = {report.n_cells}  max_abs_deviation = {report.max_abs_deviation:.6f}  "
        f"fraction_within_{args.z:g}se = {report.fraction_within_tol:.4f}"
    )
    return 0


def _cmd_dp(args) -> int:
    # bare `dp` must be runnable: the default hard-selection kind gets a
    # moderate threshold unless the user pins xi or p (or another strategy)
    if args.strategy == "kh" and args.xi is None and args.p is None:
        args.xi = 0.4
    strategy = _strategy_from_args(args)
    t_max = math.inf if args.t_max.lower() in ("inf", "infinity") else float(int(args.t_max))
    config = DPConfig(
        d=args.d,
        N=args.initial,
        P=args.growth,
        eval_interval=args.eval_interval,
        T_max=t_max,
        patience_mode=args.patience_mode,
        total_steps=args.steps,
        selection=strategy,
        refresh_direction=not args.static,
        lam=args.lam,
        seed=args.seed,
        validation_size=args.validation_size,
    )
    if args.paired_seeds:
        report = compare_adaptive_static(config, n_seeds=args.paired_seeds)
        print(f"paired_seeds = {report.n_seeds}")
        print(f"adaptive_mean_error = {_fmt(report.adaptive_mean)}")
        print(f"static_mean_error = {_fmt(report.static_mean)}")
        print(f"mean_delta = {_fmt(report.mean_delta)}  (static - adaptive)")
        print(f"se_delta = {_fmt(report.se_delta)}")
        print(f"win_rate = {report.win_rate:.4f}  ties = {report.ties}")
        print(f"win_rate_ci95 = [{report.win_rate_ci[0]:.4f}, {report.win_rate_ci[1]:.4f}]")
        return 0
    history = run_dp(config)
    csv_path = _out_path(args.out or "dp_history.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", "pool_size", "validation_accuracy", "test_error_exact",
                         "patience_counter", "augmentation_flag", "phase"])
        for event in history.events:
            writer.writerow([
                event.step,
                event.pool_size,
                _fmt(event.validation_accuracy),
                _fmt(event.test_error_exact),
                int(event.patience_counter),
                "true" if event.augmentation_flag else "false",
                event.phase,
            ])
    figure_path = _out_path(args.figure or os.path.splitext(args.out or "dp_history.csv")[0] + ".png")
    from .figures import save_dp_figure

    save_dp_figure(history, figure_path)
    print(f"wrote history ({len(history.events)} events) to {csv_path} and figure to {figure_path}")
    print(f"final_test_error = {_fmt(history.final_test_error)}")
    print(f"final_pool_size = {history.final_pool_size}")
    print(f"augmentations = {history.augmentations}")
    return 0


def _cmd_plot(args) -> int:
    spec = PlotSpec(x=args.x, y=args.y, series=args.series, logx=args.logx,
                    logy=args.logy, accuracy=args.accuracy, title=args.title)
    document = emit_plot(args.csv, spec)
    out = _out_path(args.out)
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(document)
    print(f"wrote plot to {out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="prunelab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"prunelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_theory = sub.add_parser("theory", help="print the asymptotic prediction for one cell")
    _add_strategy_flags(p_theory)
    p_theory.add_argument("--phi", type=float, required=True, help="overparametrization rate d/n")
    p_theory.add_argument("--lambda", dest="lam", type=float, required=True,
                          help="ridge penalty (0 = ridgeless limit)")
    p_theory.add_argument("--rho", type=float, required=True, help="pruning-direction alignment")
    p_theory.set_defaults(func=_cmd_theory)

    p_sim = sub.add_parser("simulate", help="run finite-size trials for one cell")
    _add_strategy_flags(p_sim)
    p_sim.add_argument("--d", type=int, required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--lambda", dest="lam", type=float, required=True)
    p_sim.add_argument("--rho", type=float, required=True)
    p_sim.add_argument("--trials", type=int, default=100)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run a sweep from a config file or preset")
    group = p_sweep.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="sweep config file")
    group.add_argument("--preset", choices=preset_names(), help="shipped sweep definition")
    p_sweep.add_argument("--workers", type=int, default=None, help="parallel cell evaluations")
    p_sweep.add_argument("--seed", type=int, default=None, help="override the base seed")
    p_sweep.add_argument("--out", default=None, help="CSV output path")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cmp = sub.add_parser("compare", help="theory-vs-experiment report (CSV + figure)")
    group = p_cmp.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="sweep config file (empirics must be on)")
    group.add_argument("--preset", choices=preset_names(), help="shipped sweep definition")
    p_cmp.add_argument("--workers", type=int, default=None)
    p_cmp.add_argument("--seed", type=int, default=None, help="override the base seed")
    p_cmp.add_argument("--out", default=None, help="CSV output path")
    p_cmp.add_argument("--figure", default=None, help="figure output path (default: CSV stem + .png)")
    p_cmp.add_argument("--z", type=float, default=3.0, help="standard-error tolerance multiplier")
    p_cmp.set_defaults(func=_cmd_compare)

    p_dp = sub.add_parser("dp", help="adaptive pool-growth run (or paired comparison)")
    _add_strategy_flags(p_dp)
    p_dp.set_defaults(strategy="kh")
    p_dp.add_argument("--d", type=int, default=64)
    p_dp.add_argument("--initial", type=int, default=128, help="initial pool size N")
    p_dp.add_argument("--growth", type=int, default=128, help="growth batch size P")
    p_dp.add_argument("--eval-interval", type=int, default=1)
    p_dp.add_argument("--t-max", default="1", help="patience (integer or inf)")
    p_dp.add_argument("--patience-mode", choices=("fixed", "incremental"), default="fixed")
    p_dp.add_argument("--steps", type=int, default=16, help="training-step budget")
    p_dp.add_argument("--lambda", dest="lam", type=float, default=1e-2)
    p_dp.add_argument("--static", action="store_true",
                      help="freeze the pruning direction at the first fit")
    p_dp.add_argument("--validation-size", type=int, default=2048)
    p_dp.add_argument("--seed", type=int, default=0)
    p_dp.add_argument("--paired-seeds", type=int, default=None,
                      help="run the adaptive-vs-static paired comparison instead")
    p_dp.add_argument("--out", default=None, help="history CSV path (default dp_history.csv)")
    p_dp.add_argument("--figure", default=None, help="figure output path")
    p_dp.set_defaults(func=_cmd_dp)

    p_plot = sub.add_parser("plot", help="render a sweep CSV to an SVG chart")
    p_plot.add_argument("--csv", required=True, help="input sweep CSV")
    p_plot.add_argument("--x", required=True, help="x column")
    p_plot.add_argument("--y", required=True, help="y column")
    p_plot.add_argument("--series", default="series_label", help="series column")
    p_plot.add_argument("--logx", action="store_true")
    p_plot.add_argument("--logy", action="store_true")
    p_plot.add_argument("--accuracy", action="store_true", help="plot 1 - y")
    p_plot.add_argument("--title", default="")
    p_plot.add_argument("--out", required=True, help="SVG output path")
    p_plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AtThresholdError, InvalidPredictionError, FixedPointError, RidgelessPathError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
