"""Sweep configuration: a flat, sectioned key-value file format.

Grammar: ``[section]`` headers, ``key = value`` lines, comma-separated lists
for axis values.  Sections:

- ``[sweep]`` — ``name`` and ``workers`` (parallel cell evaluations).
- ``[base]`` — per-cell defaults: ``d``, ``n``, ``lambda``, ``strategy``
  (a strategy token such as ``kh:xi=1.0``), ``rho``, ``trials``, ``seed``,
  and ``empirics`` (true/false: run finite-size trials in addition to theory).
- ``[axes]`` — parameters to sweep; each key maps to a comma list and the
  cross-product of all axes defines the grid.
- ``[outputs]`` — optional ``csv``, ``svg``, and ``figure`` paths.

The format round-trips: ``parse_config(render_config(spec)) == spec``.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

from .selection import parse_strategy

__all__ = [
    "SweepBase",
    "SweepSpec",
    "AXIS_NAMES",
    "parse_config",
    "render_config",
    "load_config",
    "save_config",
]

# recognized axis names and the parser for their values
_INT_AXES = ("n", "d")
_FLOAT_AXES = ("lambda", "rho", "xi", "p", "exponent")
_STR_AXES = ("strategy",)
AXIS_NAMES = _INT_AXES + _FLOAT_AXES + _STR_AXES


@dataclass(frozen=True)
class SweepBase:
    """Default cell parameters, overridden per-cell by axis values."""

    d: int = 128
    n: int = 256
    lam: float = 1e-3
    strategy: str = "all"
    rho: float = 1.0
    trials: int = 100
    seed: int = 0
    empirics: bool = False

    def __post_init__(self) -> None:
        parse_strategy(self.strategy)  # raises on malformed tokens
        if self.d < 1 or self.n < 1:
            raise ValueError(f"d and n must be positive, got d={self.d!r} n={self.n!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: base cell parameters plus a cross-product of axes."""

    name: str
    base: SweepBase
    axes: tuple[tuple[str, tuple], ...] = ()
    workers: int = 1
    csv_path: str | None = None
    svg_path: str | None = None
    figure_path: str | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("sweep name must be nonempty")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers!r}")
        seen = set()
        for axis, values in self.axes:
            if axis not in AXIS_NAMES:
                raise ValueError(f"unrecognized axis {axis!r}; known axes: {', '.join(AXIS_NAMES)}")
            if axis in seen:
                raise ValueError(f"duplicate axis {axis!r}")
            seen.add(axis)
            if len(values) < 1:
                raise ValueError(f"axis {axis!r} has no values")

    @property
    def cell_count(self) -> int:
        count = 1
        for _, values in self.axes:
            count *= len(values)
        return count


def _parse_axis_value(axis: str, text: str):
    text = text.strip()
    if axis in _INT_AXES:
        return int(text)
    if axis in _FLOAT_AXES:
        return float(text)
    return text


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str) -> SweepSpec:
    """Parse the sectioned key-value format into a SweepSpec."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"malformed config: {exc}") from exc

    def get(section: str, key: str, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key).strip()
        return default

    name = get("sweep", "name", "sweep")
    workers = int(get("sweep", "workers", "1"))

    base_kwargs = {}
    if cp.has_section("base"):
        known = {"d": int, "n": int, "lambda": float, "strategy": str,
                 "rho": float, "trials": int, "seed": int, "empirics": None}
        for key, raw in cp.items("base"):
            if key not in known:
                raise ValueError(f"unrecognized [base] key {key!r}")
            if key == "empirics":
                low = raw.strip().lower()
                if low not in ("true", "false"):
                    raise ValueError(f"empirics must be true or false, got {raw!r}")
                base_kwargs["empirics"] = low == "true"
            elif key == "lambda":
                base_kwargs["lam"] = float(raw)
            else:
                base_kwargs[key] = known[key](raw)
    base = SweepBase(**base_kwargs)

    axes: list[tuple[str, tuple]] = []
    if cp.has_section("axes"):
        for axis, raw in cp.items("axes"):
            values = tuple(_parse_axis_value(axis, part) for part in raw.split(",") if part.strip())
            axes.append((axis, values))

    return SweepSpec(
        name=name,
        base=base,
        axes=tuple(axes),
        workers=workers,
        csv_path=get("outputs", "csv"),
        svg_path=get("outputs", "svg"),
        figure_path=get("outputs", "figure"),
    )


def render_config(spec: SweepSpec) -> str:
    """Serialize a SweepSpec back to the sectioned key-value format."""
    out = io.StringIO()
    out.write("[sweep]\n")
    out.write(f"name = {spec.name}\n")
    out.write(f"workers = {spec.workers}\n\n")
    out.write("[base]\n")
    b = spec.base
    out.write(f"d = {b.d}\n")
    out.write(f"n = {b.n}\n")
    out.write(f"lambda = {_format_value(b.lam)}\n")
    out.write(f"strategy = {b.strategy}\n")
    out.write(f"rho = {_format_value(b.rho)}\n")
    out.write(f"trials = {b.trials}\n")
    out.write(f"seed = {b.seed}\n")
    out.write(f"empirics = {_format_value(b.empirics)}\n")
    if spec.axes:
        out.write("\n[axes]\n")
        for axis, values in spec.axes:
            out.write(f"{axis} = {', '.join(_format_value(v) for v in values)}\n")
    outputs = [("csv", spec.csv_path), ("svg", spec.svg_path), ("figure", spec.figure_path)]
    if any(path for _, path in outputs):
        out.write("\n[outputs]\n")
        for key, path in outputs:
            if path:
                out.write(f"{key} = {path}\n")
    return out.getvalue()


def load_config(path: str) -> SweepSpec:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def save_config(spec: SweepSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(render_config(spec))
