"""Adaptive pool-growth loop: event log semantics and the paired comparison."""

import math

import pytest

from prunelab.practice import DPConfig, DPHistory, compare_adaptive_static, run_dp
from prunelab.selection import keep_all, keep_hard


def _config(**overrides):
    base = dict(
        d=16,
        N=32,
        P=16,
        eval_interval=1,
        T_max=1,
        patience_mode="fixed",
        total_steps=6,
        selection=keep_hard(0.8),
        refresh_direction=True,
        lam=1e-2,
        seed=97,
        validation_size=256,
    )
    base.update(overrides)
    return DPConfig(**base)


def test_history_structure_and_pool_arithmetic():
    config = _config()
    history = run_dp(config)
    assert isinstance(history, DPHistory)
    assert history.final_pool_size == config.N + history.augmentations * config.P
    assert history.events[0].phase == "warmup"
    assert history.events[0].step == 0
    assert math.isnan(history.events[0].validation_accuracy)
    assert history.events[-1].phase == "cooldown"
    assert history.events[-1].step == config.total_steps
    assert history.events[-1].pool_size == history.final_pool_size
    assert all(a.step <= b.step for a, b in zip(history.events, history.events[1:]))
    for event in history.events:
        if event.phase == "train":
            assert 0.0 <= event.validation_accuracy <= 1.0
            assert 0.0 <= event.test_error_exact <= 1.0


def test_augmentation_events_reset_patience_and_grow_pool():
    history = run_dp(_config(total_steps=8))
    augment_events = [e for e in history.events if e.augmentation_flag]
    assert len(augment_events) == history.augmentations
    assert augment_events, "patience 1 with flat accuracy must trigger growth"
    for event in augment_events:
        assert event.patience_counter == 0
        assert event.phase == "train"
    sizes = [e.pool_size for e in history.events]
    assert sizes == sorted(sizes)


def test_infinite_patience_never_augments():
    history = run_dp(_config(T_max=math.inf, total_steps=10))
    assert history.augmentations == 0
    assert history.final_pool_size == _config().N
    assert not any(e.augmentation_flag for e in history.events)
    assert history.degenerate_growth is False


def test_eval_interval_controls_event_steps():
    history = run_dp(_config(eval_interval=2, total_steps=5, T_max=math.inf))
    train_steps = [e.step for e in history.events if e.phase == "train"]
    assert train_steps == [2, 4]


def test_determinism():
    config = _config(total_steps=8)
    assert run_dp(config) == run_dp(config)


def test_zero_growth_marks_degenerate():
    # a closed-form refit on an unchanged pool cannot improve, so patience
    # expires after every evaluation; with P = 0 the pool never grows
    history = run_dp(_config(P=0, selection=keep_all(), total_steps=6))
    assert history.degenerate_growth is True
    assert history.final_pool_size == _config().N
    assert history.augmentations == 5  # first eval improves, every later one expires


def test_incremental_patience_spaces_out_augmentations():
    fixed = run_dp(_config(P=0, selection=keep_all(), total_steps=11))
    incremental = run_dp(
        _config(P=0, selection=keep_all(), total_steps=11, patience_mode="incremental")
    )
    assert fixed.augmentations == 10
    # limits grow 1, 2, 3, 4: expiries at steps 2, 4, 7, 11
    assert incremental.augmentations == 4
    assert [e.step for e in incremental.events if e.augmentation_flag] == [2, 4, 7, 11]


def test_adaptive_and_static_arms_share_streams_but_differ():
    config = _config(d=24, N=48, P=48, total_steps=8)
    from dataclasses import replace

    adaptive = run_dp(replace(config, refresh_direction=True))
    static = run_dp(replace(config, refresh_direction=False))
    # identical until the first augmentation...
    first_augment = next(i for i, e in enumerate(adaptive.events) if e.augmentation_flag)
    assert adaptive.events[: first_augment + 1] == static.events[: first_augment + 1]
    # ...and genuinely different afterwards
    assert adaptive.final_test_error != static.final_test_error


def test_paired_comparison_report():
    report = compare_adaptive_static(_config(total_steps=6), n_seeds=4)
    assert report.n_seeds == 4
    assert len(report.deltas) == 4
    assert report.mean_delta == pytest.approx(report.static_mean - report.adaptive_mean)
    lo, hi = report.win_rate_ci
    assert 0.0 <= lo <= report.win_rate <= hi <= 1.0 or report.win_rate in (0.0, 1.0)
    assert report.se_delta >= 0.0


def test_keep_all_arms_tie_exactly():
    report = compare_adaptive_static(
        _config(selection=keep_all(), total_steps=6), n_seeds=3
    )
    assert report.deltas == (0.0, 0.0, 0.0)
    assert report.ties == 3
    assert report.win_rate == 0.0
    assert report.mean_delta == 0.0


def test_paired_comparison_requires_two_seeds():
    with pytest.raises(ValueError):
        compare_adaptive_static(_config(), n_seeds=1)


def test_config_validation():
    for bad in (
        dict(d=0),
        dict(N=0),
        dict(P=-1),
        dict(eval_interval=0),
        dict(T_max=0.5),
        dict(patience_mode="eager"),
        dict(total_steps=0),
        dict(lam=-1.0),
        dict(lam=math.nan),
        dict(validation_size=0),
        dict(seed=-3),
    ):
        with pytest.raises(ValueError):
            _config(**bad)
