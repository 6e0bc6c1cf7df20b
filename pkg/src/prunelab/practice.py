"""Adaptive pool-growth training loop at linear-model scale.

The loop starts from a vanilla Gaussian pool, trains by refitting the
closed-form ridge estimator on the current pool (isolating the data-selection
effect from optimization noise), checks validation accuracy every
eval_interval steps under a patience counter, and — when patience runs out —
grows the pool with hard examples drawn by rejection sampling around the
current decision boundary.  The pruning direction for new examples either
tracks the current estimator (refresh_direction=True) or stays frozen at the
direction of the first fit, which is the comparison that isolates the value
of periodically updating what counts as "hard".

Learning-rate warm-up and cool-down have no analogue for a closed-form fit;
they are recorded as no-op history events for structural fidelity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .selection import SelectionStrategy, eval_q
from .simulate import exact_error_from_cosine, fit_pool, stream, _random_unit

__all__ = [
    "DPConfig",
    "DPEvent",
    "DPHistory",
    "PairedReport",
    "run_dp",
    "compare_adaptive_static",
]

# hard cap on rejection-sampling batches per augmentation; reached only when
# the acceptance probability is pathologically small
_MAX_REJECTION_BATCHES = 10_000


@dataclass(frozen=True)
class DPConfig:
    """Controls for one adaptive run.

    N is the initial pool size, P the growth batch size, and T_max the
    initial patience (math.inf = never augment), matching the loop's own
    notation.
    """

    d: int
    N: int
    P: int
    eval_interval: int
    T_max: float  # math.inf allowed: never augment
    patience_mode: str  # "fixed" | "incremental"
    total_steps: int
    selection: SelectionStrategy
    refresh_direction: bool
    lam: float
    seed: int
    validation_size: int = 2048

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N!r}")
        if self.P < 0:
            raise ValueError(f"P must be >= 0, got {self.P!r}")
        if self.eval_interval < 1:
            raise ValueError(f"eval_interval must be >= 1, got {self.eval_interval!r}")
        if not (self.T_max >= 1):
            raise ValueError(f"T_max must be >= 1 (math.inf allowed), got {self.T_max!r}")
        if self.patience_mode not in ("fixed", "incremental"):
            raise ValueError(f"patience_mode must be 'fixed' or 'incremental', got {self.patience_mode!r}")
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps!r}")
        if not (math.isfinite(self.lam) and self.lam >= 0.0):
            raise ValueError(f"lam must be a nonnegative real, got {self.lam!r}")
        if self.validation_size < 1:
            raise ValueError(f"validation_size must be >= 1, got {self.validation_size!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class DPEvent:
    """One recorded moment of a run (evaluation, augmentation, or no-op marker)."""

    step: int
    pool_size: int
    validation_accuracy: float
    test_error_exact: float
    patience_counter: float
    augmentation_flag: bool
    phase: str = "train"  # "warmup" | "train" | "cooldown"


@dataclass
class DPHistory:
    """Ordered event log of one run plus end-of-run summaries."""

    events: list[DPEvent]
    final_test_error: float
    final_pool_size: int
    augmentations: int
    degenerate_growth: bool  # P = 0 but patience kept expiring


@dataclass(frozen=True)
class PairedReport:
    """Paired adaptive-vs-static comparison over shared seeds.

    deltas are static minus adaptive final test errors, so positive values
    mean the adaptive arm won that seed.
    """

    n_seeds: int
    deltas: tuple[float, ...]
    adaptive_mean: float
    static_mean: float
    mean_delta: float
    se_delta: float
    win_rate: float
    ties: int
    win_rate_ci: tuple[float, float]


def _labels(margins: np.ndarray) -> np.ndarray:
    return np.where(margins >= 0.0, 1.0, -1.0)


def _sample_hard(
    rng: np.random.Generator,
    strategy: SelectionStrategy,
    w_s: np.ndarray,
    count: int,
    d: int,
) -> np.ndarray:
    """Rejection sampling: Gaussian proposals accepted with probability q(x^T w_s)."""
    if count == 0:
        return np.zeros((0, d))
    accepted: list[np.ndarray] = []
    have = 0
    batch = max(4 * count, 256)
    for _ in range(_MAX_REJECTION_BATCHES):
        x = rng.standard_normal((batch, d))
        keep = rng.random(batch) < eval_q(strategy, x @ w_s)
        x = x[keep]
        if x.shape[0]:
            accepted.append(x)
            have += x.shape[0]
        if have >= count:
            return np.concatenate(accepted)[:count]
    raise RuntimeError(
        f"rejection sampling accepted {have}/{count} proposals after "
        f"{_MAX_REJECTION_BATCHES} batches; selection acceptance too low"
    )


def run_dp(config: DPConfig) -> DPHistory:
    """Run the adaptive loop; same seed gives an identical history.

    The two arms of the adaptive/static comparison share every stream: the
    truth direction, validation set, initial pool, and the augmentation
    proposal streams (indexed by augmentation number) are identical, so with
    KeepAll selection the arms produce exactly the same history.
    """
    d = config.d
    w0 = _random_unit(d, stream(config.seed, "dp-truth"))
    x_val = stream(config.seed, "dp-validation").standard_normal((config.validation_size, d))
    y_val = _labels(x_val @ w0)

    x_pool = stream(config.seed, "dp-init").standard_normal((config.N, d))
    y_pool = _labels(x_pool @ w0)

    events: list[DPEvent] = []
    events.append(
        DPEvent(
            step=0,
            pool_size=x_pool.shape[0],
            validation_accuracy=math.nan,
            test_error_exact=math.nan,
            patience_counter=0,
            augmentation_flag=False,
            phase="warmup",
        )
    )

    def evaluate(w_hat: np.ndarray) -> tuple[float, float]:
        norm = float(np.linalg.norm(w_hat))
        rho_hat = float(w_hat @ w0) / norm if norm > 0.0 else 0.0
        acc = float(np.mean(_labels(x_val @ w_hat) == y_val))
        return acc, exact_error_from_cosine(rho_hat)

    w_hat = np.zeros(d)
    frozen_dir: np.ndarray | None = None
    best_acc = -math.inf
    patience = 0
    patience_limit = config.T_max
    augmentations = 0
    degenerate = False

    for step in range(1, config.total_steps + 1):
        w_hat, _ = fit_pool(x_pool, y_pool, x_pool.shape[0], config.lam)
        if frozen_dir is None:
            norm = float(np.linalg.norm(w_hat))
            frozen_dir = w_hat / norm if norm > 0.0 else None

        if step % config.eval_interval == 0:
            acc, test_err = evaluate(w_hat)
            if acc > best_acc:
                best_acc = acc
                patience = 0
            else:
                patience += 1
            events.append(
                DPEvent(
                    step=step,
                    pool_size=x_pool.shape[0],
                    validation_accuracy=acc,
                    test_error_exact=test_err,
                    patience_counter=patience,
                    augmentation_flag=False,
                )
            )
            if patience >= patience_limit:
                norm = float(np.linalg.norm(w_hat))
                if config.refresh_direction and norm > 0.0:
                    w_s = w_hat / norm
                elif frozen_dir is not None:
                    w_s = frozen_dir
                else:
                    w_s = w0  # unreachable in practice: only if every fit was zero
                x_new = _sample_hard(
                    stream(config.seed, "dp-augment", augmentations),
                    config.selection,
                    w_s,
                    config.P,
                    d,
                )
                x_pool = np.concatenate([x_pool, x_new])
                y_pool = np.concatenate([y_pool, _labels(x_new @ w0)])
                augmentations += 1
                if config.P == 0:
                    degenerate = True
                patience = 0
                if config.patience_mode == "incremental":
                    patience_limit = patience_limit + 1
                events.append(
                    DPEvent(
                        step=step,
                        pool_size=x_pool.shape[0],
                        validation_accuracy=acc,
                        test_error_exact=test_err,
                        patience_counter=patience,
                        augmentation_flag=True,
                    )
                )

    acc, test_err = evaluate(w_hat)
    events.append(
        DPEvent(
            step=config.total_steps,
            pool_size=x_pool.shape[0],
            validation_accuracy=acc,
            test_error_exact=test_err,
            patience_counter=patience,
            augmentation_flag=False,
            phase="cooldown",
        )
    )
    return DPHistory(
        events=events,
        final_test_error=test_err,
        final_pool_size=x_pool.shape[0],
        augmentations=augmentations,
        degenerate_growth=degenerate,
    )


def _wilson_interval(wins: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    phat = wins / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def compare_adaptive_static(config: DPConfig, n_seeds: int) -> PairedReport:
    """Paired comparison of refresh_direction=True vs False over n_seeds seeds.

    Seed i runs both arms with seed = config.seed + i, sharing all random
    streams, so the arms differ only through which examples the selection
    accepts at augmentation time.
    """
    if n_seeds < 2:
        raise ValueError(f"n_seeds must be >= 2 for a paired comparison, got {n_seeds!r}")
    adaptive: list[float] = []
    static: list[float] = []
    for i in range(n_seeds):
        seed_i = (config.seed + i) % 2**64
        adaptive.append(run_dp(replace(config, refresh_direction=True, seed=seed_i)).final_test_error)
        static.append(run_dp(replace(config, refresh_direction=False, seed=seed_i)).final_test_error)
    deltas = tuple(s - a for s, a in zip(static, adaptive))
    arr = np.asarray(deltas)
    mean_delta = float(arr.mean())
    se_delta = float(arr.std(ddof=1) / math.sqrt(n_seeds)) if n_seeds > 1 else 0.0
    wins = int(np.count_nonzero(arr > 0.0))
    ties = int(np.count_nonzero(arr == 0.0))
    return PairedReport(
        n_seeds=n_seeds,
        deltas=deltas,
        adaptive_mean=float(np.mean(adaptive)),
        static_mean=float(np.mean(static)),
        mean_delta=mean_delta,
        se_delta=se_delta,
        win_rate=wins / n_seeds,
        ties=ties,
        win_rate_ci=_wilson_interval(wins, n_seeds),
    )
