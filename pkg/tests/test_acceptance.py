"""Acceptance gate: ten pass/fail checks of the shipped behavior.

Each criterion is one test named test_criterion_NN_*, so `pytest -v` shows
one PASSED/FAILED line per criterion; each also prints an explicit
[PASS]/[FAIL] line with the measured numbers.
"""

import math
import time

import numpy as np
import pytest

from prunelab.practice import DPConfig, compare_adaptive_static
from prunelab.selection import (
    keep_all,
    keep_easy,
    keep_hard,
    parse_strategy,
    scalars_closed_form,
    scalars_quadrature,
    sigmoid_power,
    strategy_keep_prob,
    strategy_scalars,
    threshold_for_keep_prob,
)
from prunelab.simulate import estimate_mean_vectors, make_directions, stream
from prunelab.spectral import (
    RegimeParams,
    ridgeless_test_error,
    spectral_state,
    stieltjes_m,
    stieltjes_m_prime,
    theory_test_error,
)
from prunelab.sweep import compare_report, preset_specs, run_specs, write_csv


def _criterion(num: int, label: str, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"\n[{status}] criterion {num}: {label} ({detail})", flush=True)
    assert passed, f"criterion {num}: {label} ({detail})"


@pytest.fixture(scope="module")
def figcool_rows():
    specs = preset_specs("figcool")
    started = time.monotonic()
    rows = run_specs(specs, workers=1)
    elapsed = time.monotonic() - started
    return specs, rows, elapsed


def test_criterion_01_theory_vs_experiment_match(figcool_rows):
    specs, rows, elapsed = figcool_rows
    # the shipped grid must honor the protocol this check is defined for
    assert len(specs) >= 3, "needs >= 3 selection thresholds"
    for spec in specs:
        assert spec.base.d == 350
        assert spec.base.rho == 1.0
        assert spec.base.trials >= 200
        assert spec.base.strategy.startswith("kh:")
        axes = dict(spec.axes)
        assert set(axes["lambda"]) == {1e-2, 1e-6}
        n_values = axes["n"]
        assert len(n_values) >= 8
        threshold = spec.base.d / strategy_keep_prob(parse_strategy(spec.base.strategy))
        assert min(n_values) < threshold < max(n_values), "pool sizes must span the threshold"

    report = compare_report(rows, z_threshold=3.0)
    passed = (
        report.n_cells == sum(1 for _ in rows)
        and report.max_abs_deviation <= 0.02
        and report.fraction_within_tol >= 0.95
        and elapsed <= 15 * 60
    )
    _criterion(
        1,
        "theory matches simulation on the d=350 grid",
        passed,
        f"cells={report.n_cells}, max|dev|={report.max_abs_deviation:.4f} (<=0.02), "
        f"within 3se={report.fraction_within_tol:.3f} (>=0.95), runtime={elapsed:.0f}s (<=900s)",
    )


def test_criterion_02_interpolation_threshold_peak(figcool_rows):
    specs, _, _ = figcool_rows
    worst = 0.0
    for spec in specs:
        scalars = strategy_scalars(parse_strategy(spec.base.strategy), spec.base.rho)
        p = scalars.keep_prob
        d = spec.base.d
        n_values = dict(spec.axes)["n"]
        grid = np.arange(min(n_values), max(n_values) + 1)
        curve = [
            theory_test_error(
                RegimeParams(phi=d / float(n), lam=1e-6, keep_prob=p), scalars
            ).test_error
            for n in grid
        ]
        peak_n = float(grid[int(np.argmax(curve))])
        worst = max(worst, abs(peak_n - d / p) / (d / p))
    passed = worst <= 0.10
    _criterion(
        2,
        "lam=1e-6 theory curve peaks at the interpolation threshold",
        passed,
        f"max relative offset from n = d/p: {worst:.4f} (<=0.10)",
    )


def test_criterion_03_classical_mp_reduction():
    rng = np.random.default_rng(20260818)
    worst = 0.0
    for _ in range(20):
        phi = float(rng.uniform(0.05, 5.0))
        lam = float(10.0 ** rng.uniform(-4, 1))
        z = -lam
        roots = np.roots([phi * z, phi - 1.0 + z, 1.0])
        real = roots[np.abs(roots.imag) < 1e-9].real
        oracle = float(real[real > 0.0][0])
        value = stieltjes_m(RegimeParams(phi=phi, lam=lam, keep_prob=1.0))
        worst = max(worst, abs(value - oracle) / abs(oracle))
    passed = worst <= 1e-12
    _criterion(
        3,
        "keep-all Stieltjes transform reduces to the classical closed form",
        passed,
        f"worst relative error over 20 random points: {worst:.2e} (<=1e-12)",
    )


def test_criterion_04_closed_form_vs_quadrature():
    xis = (0.25, 0.75, 1.5, 2.5)
    rhos = (0.0, 0.3, 0.6, 0.9)
    worst = 0.0
    worst_add = 0.0
    for xi in xis:
        for rho in rhos:
            for strategy in (keep_hard(xi), keep_easy(xi)):
                closed = scalars_closed_form(strategy, rho)
                quad = scalars_quadrature(strategy, rho, nodes=256)
                for field in ("keep_prob", "gamma", "beta", "beta_tilde"):
                    worst = max(worst, abs(getattr(closed, field) - getattr(quad, field)))
            hard = scalars_closed_form(keep_hard(xi), rho)
            easy = scalars_closed_form(keep_easy(xi), rho)
            every = scalars_closed_form(keep_all(), rho)
            worst_add = max(
                worst_add,
                abs(hard.keep_prob + easy.keep_prob - 1.0),
                abs(hard.gamma + easy.gamma - 1.0),
                abs(hard.beta + easy.beta - every.beta),
                abs(hard.beta_tilde + easy.beta_tilde - every.beta_tilde),
            )
    passed = worst <= 1e-8 and worst_add <= 1e-10
    _criterion(
        4,
        "threshold-strategy scalars: closed form vs quadrature and additivity",
        passed,
        f"max |closed - quadrature|={worst:.2e} (<=1e-8), max additivity defect={worst_add:.2e} (<=1e-10)",
    )


def test_criterion_05_derivative_identities():
    # three strategies with well-separated keep probabilities give the
    # (phi, lam, p) grid its third axis; scalars stay internally consistent
    strategies = (
        keep_hard(threshold_for_keep_prob("kh", 0.35)),
        keep_hard(threshold_for_keep_prob("kh", 0.65)),
        keep_all(),
    )
    points = 0
    worst_fd = 0.0
    worst_identity = 0.0
    for strategy in strategies:
        scalars = strategy_scalars(strategy, 0.6)
        p, gamma = scalars.keep_prob, scalars.gamma
        for phi in (0.2, 0.5, 1.3, 3.0):
            if abs(phi - p) < 0.1:
                continue
            for lam in (1e-3, 1e-2, 0.1, 1.0):
                params = RegimeParams(phi=phi, lam=lam, keep_prob=p)
                m = stieltjes_m(params)
                m_prime = stieltjes_m_prime(params)
                state = spectral_state(params, scalars)
                h = 1e-4 * lam

                def m_at(l):
                    return stieltjes_m(RegimeParams(phi=phi, lam=l, keep_prob=p))

                def mt_at(l):
                    mm = m_at(l)
                    return 1.0 / (gamma / (1.0 + phi * mm) + l)

                fd_m = (m_at(lam - h) - m_at(lam + h)) / (2.0 * h)
                fd_mt = (mt_at(lam - h) - mt_at(lam + h)) / (2.0 * h)
                worst_fd = max(
                    worst_fd,
                    abs(m_prime - fd_m) / abs(fd_m),
                    abs(state.m_tilde_prime - fd_mt) / abs(fd_mt),
                )
                z = -lam
                identity_m = m * m / (1.0 - (1.0 + z * m) ** 2 * phi / p)
                identity_mt = state.m_tilde**2 * (
                    1.0 + gamma * phi * m_prime / (1.0 + phi * m) ** 2
                )
                worst_identity = max(
                    worst_identity,
                    abs(m_prime - identity_m) / abs(identity_m),
                    abs(state.m_tilde_prime - identity_mt) / abs(identity_mt),
                )
                points += 1
    passed = points >= 48 and worst_fd <= 1e-6 and worst_identity <= 1e-8
    _criterion(
        5,
        "analytic derivatives match finite differences and the closed identities",
        passed,
        f"{points} grid points (>=48), worst FD rel err={worst_fd:.2e} (<=1e-6), "
        f"worst identity rel err={worst_identity:.2e} (<=1e-8)",
    )


def test_criterion_06_ridgeless_consistency():
    worst = 0.0
    cells = 0
    for rho in (1.0, 0.6):
        scalars = strategy_scalars(keep_hard(1.0), rho)
        p = scalars.keep_prob
        for phi in (0.15, 0.3, 0.45, 0.62, 0.9, 1.2, 1.8, 3.0):
            if abs(phi - p) < 0.05:
                continue
            limit = ridgeless_test_error(scalars, phi, p).test_error
            ridge = theory_test_error(
                RegimeParams(phi=phi, lam=1e-8, keep_prob=p), scalars
            ).test_error
            worst = max(worst, abs(limit - ridge))
            cells += 1
    passed = worst <= 1e-3 and cells >= 12
    _criterion(
        6,
        "ridgeless limits agree with the lam -> 0 ridge prediction in both regimes",
        passed,
        f"{cells} cells, max |difference|={worst:.2e} (<=1e-3)",
    )


def test_criterion_07_pruning_benefit_and_excess():
    d, kept, lam = 512, 1280, 1e-3
    errors = {}
    for p in (1.0, 0.5, 0.02):
        strategy = keep_all() if p == 1.0 else keep_hard(threshold_for_keep_prob("kh", p))
        scalars = strategy_scalars(strategy, 1.0)
        n = kept / scalars.keep_prob
        errors[p] = theory_test_error(
            RegimeParams(phi=d / n, lam=lam, keep_prob=scalars.keep_prob), scalars
        ).test_error
    passed = errors[0.5] < errors[1.0] and errors[0.02] > errors[0.5]
    _criterion(
        7,
        "moderate hard-keeping beats keep-all; excessive pruning degrades",
        passed,
        f"at kept={kept}, d={d}: err(p=0.5)={errors[0.5]:.4f} < err(all)={errors[1.0]:.4f}, "
        f"err(p=0.02)={errors[0.02]:.4f} > err(p=0.5)",
    )


def test_criterion_08_kept_class_mean_form():
    combos = (
        (keep_hard(1.0), 0.3),
        (keep_hard(0.5), 0.9),
        (keep_easy(1.0), 0.6),
        (keep_easy(0.8), -0.5),
        (sigmoid_power(2.0), 0.5),
        (keep_all(), 0.7),
    )
    d, samples = 24, 1_000_000
    rng = stream(88, "acceptance-means")
    worst_cos = 1.0
    worst_norm = 0.0
    for strategy, rho in combos:
        scalars = strategy_scalars(strategy, rho)
        w0, w_s = make_directions(d, rho, rng)
        v = w0 - rho * w_s
        v /= np.linalg.norm(v)
        target = scalars.beta_tilde * w_s + scalars.beta * v
        estimate = estimate_mean_vectors(strategy, w_s, w0, samples, rng)
        cosine = float(estimate @ target) / (
            float(np.linalg.norm(estimate)) * float(np.linalg.norm(target))
        )
        norm_err = abs(
            float(np.linalg.norm(estimate)) - float(np.linalg.norm(target))
        ) / float(np.linalg.norm(target))
        worst_cos = min(worst_cos, cosine)
        worst_norm = max(worst_norm, norm_err)
    passed = worst_cos >= 0.999 and worst_norm <= 0.01
    _criterion(
        8,
        "kept-class mean matches beta_tilde*u + beta*v at 1e6 samples",
        passed,
        f"6 combos, worst cosine={worst_cos:.5f} (>=0.999), "
        f"worst norm rel err={worst_norm:.4f} (<=0.01)",
    )


def test_criterion_09_adaptive_direction_refresh():
    config = DPConfig(
        d=64,
        N=128,
        P=128,
        eval_interval=1,
        T_max=1,
        patience_mode="fixed",
        total_steps=16,
        selection=keep_hard(0.4),
        refresh_direction=True,
        lam=1e-2,
        seed=20260818,
        validation_size=2048,
    )
    report = compare_adaptive_static(config, n_seeds=20)
    keepall = compare_adaptive_static(
        DPConfig(
            d=64,
            N=128,
            P=128,
            eval_interval=1,
            T_max=1,
            patience_mode="fixed",
            total_steps=16,
            selection=keep_all(),
            refresh_direction=True,
            lam=1e-2,
            seed=20260818,
            validation_size=2048,
        ),
        n_seeds=20,
    )
    passed = (
        report.adaptive_mean <= report.static_mean
        and report.win_rate >= 0.60
        and abs(keepall.mean_delta) <= 2.0 * keepall.se_delta + 1e-15
    )
    _criterion(
        9,
        "refreshing the pruning direction helps; keep-all arms tie",
        passed,
        f"20 paired seeds: adaptive={report.adaptive_mean:.4f} <= static={report.static_mean:.4f}, "
        f"win rate={report.win_rate:.2f} (>=0.60); keep-all |mean delta|={abs(keepall.mean_delta):.2e} "
        f"<= 2se={2.0 * keepall.se_delta:.2e}",
    )


def test_criterion_10_byte_identical_reruns(tmp_path):
    specs = preset_specs("figcool-small")
    paths = []
    for tag, workers in (("a", 1), ("b", 2), ("c", 1)):
        rows = run_specs(specs, workers=workers)
        path = tmp_path / f"{tag}.csv"
        write_csv(rows, str(path))
        paths.append(path)
    a, b, c = (p.read_bytes() for p in paths)
    passed = a == b == c and len(a) > 0
    _criterion(
        10,
        "sweep reruns are byte-identical across runs and worker counts",
        passed,
        f"{len(a)} bytes, identical across workers=1,2 and a repeat run",
    )
