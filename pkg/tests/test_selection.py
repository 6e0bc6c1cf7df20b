"""Selection strategies and their Gaussian moment scalars."""

import math

import numpy as np
import pytest

from prunelab.selection import (
    NoClosedFormError,
    PDF0,
    SelectionStrategy,
    eval_q,
    format_strategy,
    gauss_pdf,
    keep_all,
    keep_easy,
    keep_hard,
    mean_vector_coeffs,
    parse_strategy,
    scalars_closed_form,
    scalars_quadrature,
    sigmoid_power,
    strategy_keep_prob,
    strategy_scalars,
    threshold_for_keep_prob,
    validate_rho,
)

GRID_XIS = (0.25, 0.5, 1.0, 2.0)
GRID_RHOS = (0.0, 0.3, 0.6, 0.9)


# --- q evaluation -----------------------------------------------------------


def test_eval_q_keep_all_is_one_everywhere():
    t = np.linspace(-5, 5, 11)
    assert np.all(eval_q(keep_all(), t) == 1.0)


def test_eval_q_threshold_semantics():
    kh = keep_hard(1.0)
    assert eval_q(kh, 0.0) == 1.0
    assert eval_q(kh, 1.0) == 1.0  # boundary kept
    assert eval_q(kh, 1.0000001) == 0.0
    assert eval_q(kh, -0.5) == 1.0
    ke = keep_easy(1.0)
    t = np.array([-2.0, -1.0, 0.0, 0.5, 1.5])
    assert np.array_equal(eval_q(kh, t) + eval_q(ke, t), np.ones(5))


def test_eval_q_sigmoid_power():
    sig = sigmoid_power(2.0)
    assert eval_q(sig, 0.0) == pytest.approx(1.0)  # sup of the base is at t=0
    t = np.linspace(-6, 6, 41)
    q = eval_q(sig, t)
    assert np.all((0.0 <= q) & (q <= 1.0))
    assert np.allclose(q, q[::-1])  # even function
    assert np.all(np.diff(q[t >= 0]) <= 0)  # decreasing in |t|
    # base = 4 sigma(t) sigma(-t), so the power-1 value is checkable directly
    s = 1.0 / (1.0 + math.exp(-1.3))
    assert eval_q(sigmoid_power(1.0), 1.3) == pytest.approx(4.0 * s * (1.0 - s), rel=1e-14)
    assert eval_q(sigmoid_power(0.0), 3.7) == 1.0


def test_eval_q_extreme_arguments_are_finite():
    sig = sigmoid_power(3.0)
    q = eval_q(sig, np.array([-800.0, 800.0]))
    assert np.all(q == 0.0)


# --- construction and text form --------------------------------------------


@pytest.mark.parametrize(
    "factory, args",
    [
        (keep_hard, (-0.5,)),
        (keep_hard, (float("nan"),)),
        (keep_easy, (-1.0,)),
        (sigmoid_power, (-2.0,)),  # sup-normalization impossible for negative powers
        (sigmoid_power, (float("inf"),)),
        (sigmoid_power, (float("nan"),)),
    ],
)
def test_invalid_parameters_rejected(factory, args):
    with pytest.raises(ValueError):
        factory(*args)


def test_cross_parameter_rejection():
    with pytest.raises(ValueError):
        SelectionStrategy("all", xi=1.0)
    with pytest.raises(ValueError):
        SelectionStrategy("kh", xi=1.0, exponent=2.0)
    with pytest.raises(ValueError):
        SelectionStrategy("sig", xi=1.0, exponent=2.0)
    with pytest.raises(ValueError):
        SelectionStrategy("kh")
    with pytest.raises(ValueError):
        SelectionStrategy("sig")


def test_keep_hard_accepts_infinite_threshold():
    kh = keep_hard(math.inf)
    assert strategy_keep_prob(kh) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "strategy",
    [keep_all(), keep_hard(1.0), keep_hard(0.25), keep_easy(2.0), sigmoid_power(2.0), sigmoid_power(0.5)],
)
def test_format_parse_round_trip(strategy):
    assert parse_strategy(format_strategy(strategy)) == strategy


@pytest.mark.parametrize("text", ["bogus", "kh", "kh:xi", "kh:w=1", "sig:xi=1", "kh:xi=abc"])
def test_parse_rejects_malformed(text):
    with pytest.raises(ValueError):
        parse_strategy(text)


def test_threshold_for_keep_prob():
    # keep-hard: p = 2 Phi(xi) - 1, so p = 0.5 at the third quartile
    assert threshold_for_keep_prob("kh", 0.5) == pytest.approx(0.6744897501960817, rel=1e-12)
    assert threshold_for_keep_prob("kh", 1.0) == math.inf
    # keep-easy: p = 2 (1 - Phi(xi))
    assert threshold_for_keep_prob("ke", 0.5) == pytest.approx(0.6744897501960817, rel=1e-12)
    for kind in ("kh", "ke"):
        for p in (0.02, 0.25, 0.5, 0.9):
            xi = threshold_for_keep_prob(kind, p)
            strat = SelectionStrategy(kind, xi=xi)
            assert strategy_keep_prob(strat) == pytest.approx(p, abs=1e-12)
    with pytest.raises(ValueError):
        threshold_for_keep_prob("kh", 0.0)
    with pytest.raises(ValueError):
        threshold_for_keep_prob("all", 0.5)


def test_validate_rho():
    assert validate_rho(0.7) == 0.7
    assert validate_rho(1.0) == 1.0
    assert validate_rho(-1.0) == -1.0
    with pytest.raises(ValueError):
        validate_rho(1.5)
    with pytest.raises(ValueError):
        validate_rho(float("nan"))
    with pytest.raises(ValueError):
        validate_rho(1.0 - 1e-10)  # inside the boundary guard band


# --- closed forms vs quadrature ---------------------------------------------


def test_closed_form_matches_quadrature_on_grid():
    worst = 0.0
    for xi in GRID_XIS:
        for rho in GRID_RHOS:
            for strat in (keep_hard(xi), keep_easy(xi)):
                cf = scalars_closed_form(strat, rho)
                qd = scalars_quadrature(strat, rho, nodes=128)
                for field in ("keep_prob", "gamma", "beta", "beta_tilde"):
                    worst = max(worst, abs(getattr(cf, field) - getattr(qd, field)))
    assert worst <= 1e-8


def test_keep_hard_keep_easy_additivity():
    for xi in GRID_XIS:
        for rho in GRID_RHOS:
            kh = scalars_closed_form(keep_hard(xi), rho)
            ke = scalars_closed_form(keep_easy(xi), rho)
            assert kh.keep_prob + ke.keep_prob == pytest.approx(1.0, abs=1e-10)
            assert kh.gamma + ke.gamma == pytest.approx(1.0, abs=1e-10)
            assert kh.beta + ke.beta == pytest.approx(
                2.0 * PDF0 * math.sqrt(1.0 - rho * rho), abs=1e-10
            )
            assert kh.beta_tilde + ke.beta_tilde == pytest.approx(2.0 * rho * PDF0, abs=1e-10)


def test_keep_all_scalars():
    for rho in (0.0, 0.4, 0.9):
        sc = strategy_scalars(keep_all(), rho)
        assert sc.keep_prob == 1.0
        assert sc.gamma == pytest.approx(1.0, abs=1e-12)
        assert sc.beta == pytest.approx(2.0 * PDF0 * math.sqrt(1.0 - rho * rho), abs=1e-12)
        assert sc.beta_tilde == pytest.approx(2.0 * rho * PDF0, abs=1e-12)


def test_known_keep_hard_values():
    sc1 = scalars_closed_form(keep_hard(1.0), 0.0)
    assert sc1.keep_prob == pytest.approx(0.6826894921370859, rel=1e-12)
    assert sc1.gamma == pytest.approx(0.19874804309879915, rel=1e-10)
    sc05 = scalars_closed_form(keep_hard(0.5), 0.0)
    assert sc05.keep_prob == pytest.approx(0.3829249225480263, rel=1e-10)
    assert sc05.gamma == pytest.approx(0.030859595783726768, rel=1e-8)
    # p = 2 Phi(xi) - 1 and gamma = p - 2 xi pdf(xi), independently recomputed
    from scipy.special import ndtr

    for xi in (0.25, 0.7, 1.3, 2.5):
        sc = scalars_closed_form(keep_hard(xi), 0.0)
        p_ref = 2.0 * float(ndtr(xi)) - 1.0
        assert sc.keep_prob == pytest.approx(p_ref, rel=1e-13)
        assert sc.gamma == pytest.approx(p_ref - 2.0 * xi * gauss_pdf(xi), rel=1e-13)


def test_boundary_alignment_scalars():
    # at |rho| = 1 the kept-mean coefficient collapses to sign(rho) E[q |G|]
    sc = strategy_scalars(keep_hard(1.0), 1.0)
    assert sc.beta == 0.0
    assert sc.beta_tilde == pytest.approx(2.0 * (gauss_pdf(0.0) - gauss_pdf(1.0)), rel=1e-12)
    sc_neg = strategy_scalars(keep_hard(1.0), -1.0)
    assert sc_neg.beta_tilde == pytest.approx(-sc.beta_tilde, rel=1e-12)
    ke = strategy_scalars(keep_easy(1.0), 1.0)
    assert ke.beta_tilde == pytest.approx(2.0 * gauss_pdf(1.0), rel=1e-12)
    assert strategy_scalars(keep_all(), 1.0).beta_tilde == pytest.approx(
        math.sqrt(2.0 / math.pi), rel=1e-12
    )
    sig = strategy_scalars(sigmoid_power(2.0), 1.0)
    assert sig.beta == 0.0
    assert sig.beta_tilde > 0.0


def test_quadrature_guards():
    with pytest.raises(ValueError):
        scalars_quadrature(keep_hard(1.0), 1.0)
    with pytest.raises(ValueError):
        scalars_quadrature(keep_hard(1.0), 0.5, nodes=16)
    with pytest.raises(NoClosedFormError):
        scalars_closed_form(sigmoid_power(2.0), 0.5)


def test_rho_sign_symmetry():
    for strat in (keep_hard(0.8), keep_easy(1.2), sigmoid_power(1.5)):
        plus = strategy_scalars(strat, 0.6)
        minus = strategy_scalars(strat, -0.6)
        assert plus.keep_prob == pytest.approx(minus.keep_prob, abs=1e-12)
        assert plus.gamma == pytest.approx(minus.gamma, abs=1e-12)
        assert plus.beta == pytest.approx(minus.beta, abs=1e-12)
        assert plus.beta_tilde == pytest.approx(-minus.beta_tilde, abs=1e-12)


def test_keep_prob_monotone_in_threshold():
    xis = np.linspace(0.05, 3.0, 12)
    kh_probs = [strategy_keep_prob(keep_hard(x)) for x in xis]
    ke_probs = [strategy_keep_prob(keep_easy(x)) for x in xis]
    assert all(a < b for a, b in zip(kh_probs, kh_probs[1:]))
    assert all(a > b for a, b in zip(ke_probs, ke_probs[1:]))


def test_second_moment_ordering():
    # hard examples concentrate near the boundary: gamma < p; easy: gamma > p
    for xi in GRID_XIS:
        kh = scalars_closed_form(keep_hard(xi), 0.0)
        ke = scalars_closed_form(keep_easy(xi), 0.0)
        assert kh.gamma < kh.keep_prob
        assert ke.gamma > ke.keep_prob


# --- frozen Monte Carlo oracle ----------------------------------------------
# 10^7 bivariate Gaussian draws, seed 987654321: sample means of q, qG^2, and
# the kept-mean coefficients at rho = 0.5, with their standard errors.

_MC_TOL = 5.0  # standard errors


def _assert_close_to_mc(value, mc_mean, mc_se):
    assert abs(value - mc_mean) <= _MC_TOL * mc_se


def test_keep_hard_scalars_match_frozen_mc():
    sc = strategy_scalars(keep_hard(1.0), 0.5)
    _assert_close_to_mc(sc.keep_prob, 0.6824434000, 1.47e-4)
    _assert_close_to_mc(sc.gamma, 0.1987779216, 8.53e-5)
    _assert_close_to_mc(sc.beta, 0.5192762138, 1.12e-4)
    _assert_close_to_mc(sc.beta_tilde, 0.0888502337, 1.46e-4)


def test_sigmoid_power_scalars_match_frozen_mc():
    sc = strategy_scalars(sigmoid_power(2.0), 0.5)
    _assert_close_to_mc(sc.keep_prob, 0.7174048562, 8.39e-5)
    _assert_close_to_mc(sc.gamma, 0.3793625266, 8.97e-5)
    _assert_close_to_mc(sc.beta, 0.5279286808, 7.53e-5)
    _assert_close_to_mc(sc.beta_tilde, 0.1608759630, 1.48e-4)


def test_fresh_mc_base_moments():
    # definitional check with an in-test sample: p = E[q(G)], gamma = E[q G^2]
    rng = np.random.default_rng(20240518)
    g = rng.standard_normal(400_000)
    for strat in (keep_hard(0.9), sigmoid_power(1.3)):
        q = eval_q(strat, g)
        p_hat = q.mean()
        g2 = q * g * g
        gamma_hat = g2.mean()
        p_se = q.std(ddof=1) / math.sqrt(g.size)
        gamma_se = g2.std(ddof=1) / math.sqrt(g.size)
        assert abs(strategy_keep_prob(strat) - p_hat) <= 4.0 * p_se
        assert abs(strategy_scalars(strat, 0.0).gamma - gamma_hat) <= 4.0 * gamma_se


def test_quadrature_node_convergence():
    # doubling nodes must not move the scalars (smooth and panel paths)
    for strat in (sigmoid_power(2.0), keep_hard(0.75)):
        lo = scalars_quadrature(strat, 0.45, nodes=64)
        hi = scalars_quadrature(strat, 0.45, nodes=256)
        for field in ("keep_prob", "gamma", "beta", "beta_tilde"):
            assert getattr(lo, field) == pytest.approx(getattr(hi, field), abs=1e-10)


def test_mean_vector_coeffs_match_scalars():
    for strat in (keep_hard(1.0), sigmoid_power(2.0)):
        for rho in (0.0, 0.5, 0.9):
            sc = strategy_scalars(strat, rho)
            beta_tilde, beta = mean_vector_coeffs(strat, rho)
            assert beta_tilde == pytest.approx(sc.beta_tilde, abs=1e-10)
            assert beta == pytest.approx(sc.beta, abs=1e-10)
