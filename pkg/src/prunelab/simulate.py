"""Finite-dimensional Monte Carlo ground truth for the spectral predictions.

One trial draws a pool of n standard Gaussian rows labeled by the sign of the
projection onto a hidden unit direction w0, keeps each row with probability
q(x^T w_s) for a unit pruning direction w_s at a prescribed alignment
rho = w_s^T w0, and fits the ridge estimator on the kept rows (normalized by
the pool size n, not the kept count):

    (X^T D X / n + lam I) w_hat = X^T D Y / n

For isotropic Gaussian test points the exact misclassification rate of any
estimator is arccos(cos(w_hat, w0)) / pi, which removes test-sampling noise
from theory-vs-experiment comparisons; a Monte Carlo test-error path exists
to validate that identity.

Randomness: every (seed, trial_index, purpose) triple derives an independent
counter-based Philox stream, so results are bit-reproducible under any
execution order or worker count.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .selection import SelectionStrategy, eval_q, validate_rho

__all__ = [
    "ExperimentConfig",
    "FitResult",
    "CellAggregate",
    "stream",
    "stable_token",
    "make_directions",
    "fit_pool",
    "run_trial",
    "mc_test_error",
    "run_cell",
    "estimate_mean_vectors",
    "exact_error_from_cosine",
]

_UNIT_TOL = 1e-9


def stable_token(name: str) -> int:
    """Platform-stable 32-bit token so stream purposes can be named by string."""
    return zlib.crc32(name.encode("utf-8"))


def stream(seed: int, *path) -> np.random.Generator:
    """Independent counter-based random stream for (seed, *path).

    Path entries may be integers (e.g. trial indices) or strings (purposes),
    hashed to stable tokens.  Streams for distinct paths are statistically
    independent and identical across platforms, runs, and thread schedules.
    Gaussian variates use numpy's ziggurat standard_normal; bit-exact
    reproducibility is per numpy release.
    """
    tokens = tuple(stable_token(x) if isinstance(x, str) else int(x) for x in path)
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tokens)
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation cell: geometry, penalty, strategy, alignment, repetitions."""

    d: int
    n: int
    lam: float
    strategy: SelectionStrategy
    rho: float
    trials: int
    seed: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not (math.isfinite(self.lam) and self.lam >= 0.0):
            raise ValueError(f"lam must be a nonnegative real, got {self.lam!r}")
        validate_rho(self.rho)
        if abs(self.rho) < 1.0 and self.d < 2:
            raise ValueError("d >= 2 required when |rho| < 1 (needs an orthogonal complement)")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass
class FitResult:
    """Outcome of one fitted trial."""

    w_hat: np.ndarray
    kept_count: int
    rho_hat: float
    test_error_exact: float
    test_error_mc: float | None = None
    test_error_mc_se: float | None = None
    min_norm: bool = False


@dataclass(frozen=True)
class CellAggregate:
    """Deterministic aggregate of one cell's trials."""

    mean_error: float
    std_error: float
    kept_mean: float
    trials: int
    failures: int


def exact_error_from_cosine(rho_hat: float) -> float:
    """Exact isotropic-Gaussian misclassification rate from the angle cosine."""
    return math.acos(min(1.0, max(-1.0, rho_hat))) / math.pi


def _random_unit(d: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        g = rng.standard_normal(d)
        norm = float(np.linalg.norm(g))
        if norm > 0.0:
            return g / norm


def make_directions(d: int, rho_target: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Unit labeling direction w0 and unit pruning direction w_s with w_s^T w0 = rho_target."""
    rho_target = validate_rho(rho_target)
    if abs(rho_target) == 1.0:
        w0 = _random_unit(d, rng)
        return w0, math.copysign(1.0, rho_target) * w0
    if d < 2:
        raise ValueError("d >= 2 required when |rho_target| < 1")
    w0 = _random_unit(d, rng)
    g = rng.standard_normal(d)
    g -= (g @ w0) * w0
    norm = float(np.linalg.norm(g))
    while norm == 0.0:  # probability-zero redraw guard
        g = rng.standard_normal(d)
        g -= (g @ w0) * w0
        norm = float(np.linalg.norm(g))
    perp = g / norm
    w_s = rho_target * w0 + math.sqrt(1.0 - rho_target * rho_target) * perp
    return w0, w_s / float(np.linalg.norm(w_s))


def fit_pool(x_kept: np.ndarray, y_kept: np.ndarray, pool_n: int, lam: float) -> tuple[np.ndarray, bool]:
    """Solve (X^T X / pool_n + lam I) w = X^T y / pool_n on the kept rows.

    lam > 0 uses a Cholesky factorization of the SPD system.  lam = 0 falls
    back to the minimum-norm least-squares solution; the returned flag is
    True when that path was taken with a rank-deficient kept design.
    """
    x_kept = np.atleast_2d(np.asarray(x_kept, dtype=float))
    y_kept = np.asarray(y_kept, dtype=float)
    d = x_kept.shape[1]
    if lam > 0.0:
        gram = x_kept.T @ x_kept / pool_n
        gram[np.diag_indices_from(gram)] += lam
        rhs = x_kept.T @ y_kept / pool_n
        w = cho_solve(cho_factor(gram, lower=True, check_finite=False), rhs, check_finite=False)
        return w, False
    if x_kept.shape[0] == 0:
        return np.zeros(d), True
    w, _, rank, _ = np.linalg.lstsq(x_kept, y_kept, rcond=None)
    return w, bool(rank < d)


def _labels(margins: np.ndarray) -> np.ndarray:
    return np.where(margins >= 0.0, 1.0, -1.0)


def run_trial(config: ExperimentConfig, trial_index: int) -> FitResult:
    """One fully deterministic trial of (sample, select, fit, score)."""
    rng_dirs = stream(config.seed, trial_index, "directions")
    rng_pool = stream(config.seed, trial_index, "pool")
    rng_select = stream(config.seed, trial_index, "selection")

    w0, w_s = make_directions(config.d, config.rho, rng_dirs)
    x = rng_pool.standard_normal((config.n, config.d))
    y = _labels(x @ w0)
    keep_prob = eval_q(config.strategy, x @ w_s)
    keep = rng_select.random(config.n) < keep_prob

    w_hat, min_norm = fit_pool(x[keep], y[keep], config.n, config.lam)
    norm = float(np.linalg.norm(w_hat))
    rho_hat = float(w_hat @ w0) / norm if norm > 0.0 else 0.0
    return FitResult(
        w_hat=w_hat,
        kept_count=int(np.count_nonzero(keep)),
        rho_hat=rho_hat,
        test_error_exact=exact_error_from_cosine(rho_hat),
        min_norm=min_norm,
    )


def mc_test_error(
    w_hat: np.ndarray,
    w0: np.ndarray,
    n_test: int,
    rng: np.random.Generator,
    batch_size: int = 262_144,
) -> tuple[float, float]:
    """Monte Carlo misclassification rate on fresh Gaussian test points.

    Returns (estimate, binomial standard error).  Exists to validate the
    arccos identity used by the exact path.
    """
    w_hat = np.asarray(w_hat, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    if not np.linalg.norm(w_hat) > 0.0 or not np.linalg.norm(w0) > 0.0:
        raise ValueError("mc_test_error requires nonzero vectors")
    d = w0.shape[0]
    mismatches = 0
    remaining = int(n_test)
    while remaining > 0:
        b = min(batch_size, remaining)
        x = rng.standard_normal((b, d))
        mismatches += int(np.count_nonzero((x @ w_hat >= 0.0) != (x @ w0 >= 0.0)))
        remaining -= b
    est = mismatches / n_test
    se = math.sqrt(max(est * (1.0 - est), 1e-300) / n_test)
    return est, se


def run_cell(config: ExperimentConfig) -> CellAggregate:
    """Aggregate `trials` independent trials; deterministic for a fixed seed.

    Trials derive their own streams from (seed, trial_index), so any
    execution order yields bit-identical aggregates.  A failed trial is
    counted and excluded from the statistics rather than aborting the cell.
    """
    errors: list[float] = []
    kept: list[int] = []
    failures = 0
    for trial in range(config.trials):
        try:
            result = run_trial(config, trial)
        except Exception:
            failures += 1
            continue
        errors.append(result.test_error_exact)
        kept.append(result.kept_count)
    if errors:
        arr = np.asarray(errors)
        mean = float(arr.mean())
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        kept_mean = float(np.mean(kept))
    else:
        mean = math.nan
        std = math.nan
        kept_mean = math.nan
    return CellAggregate(
        mean_error=mean,
        std_error=std,
        kept_mean=kept_mean,
        trials=config.trials,
        failures=failures,
    )


def _require_unit(name: str, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if abs(float(np.linalg.norm(v)) - 1.0) > _UNIT_TOL:
        raise ValueError(f"{name} must be a unit vector (inputs are rejected, not normalized)")
    return v


def estimate_mean_vectors(
    strategy: SelectionStrategy,
    w_s: np.ndarray,
    w0: np.ndarray,
    n_samples: int,
    rng: np.random.Generator,
    batch_size: int = 131_072,
) -> np.ndarray:
    """Monte Carlo estimate of the kept class mean c = E[q(x^T w_s) y x].

    Validation target: c = beta_tilde * u + beta * v with u = w_s and v the
    unit completion of w0 in span(w_s, w0).
    """
    w_s = _require_unit("w_s", w_s)
    w0 = _require_unit("w0", w0)
    d = w0.shape[0]
    acc = np.zeros(d)
    remaining = int(n_samples)
    while remaining > 0:
        b = min(batch_size, remaining)
        x = rng.standard_normal((b, d))
        q = eval_q(strategy, x @ w_s)
        y = _labels(x @ w0)
        acc += x.T @ (q * y)
        remaining -= b
    return acc / n_samples
