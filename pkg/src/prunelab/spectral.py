"""Spectral theory of the selection-weighted sample covariance.

The kept-sample covariance X^T D X / n of standard Gaussian rows, with D a
diagonal of Bernoulli keep indicators, has a limiting spectral law whose
Stieltjes transform m(z) solves

    phi * z * m^2 + (phi - p + z) * m + 1 = 0        (z = -lam < 0)

a keep-probability-distorted Marchenko-Pastur law: p is the keep probability
and phi = d/n the overparametrization rate; p = 1 recovers classical MP.
From m and the companion transforms

    s(z) = gamma / (1 + phi m(z)),     m~(z) = 1 / (s(z) - z)

this module assembles the asymptotic test-error prediction for the ridge
classifier trained on the kept examples, including the lam -> 0 (ridgeless)
limits on both sides of the interpolation threshold phi = p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtr

from .selection import StrategyScalars

__all__ = [
    "RegimeParams",
    "SpectralState",
    "TheoryPrediction",
    "RidgelessPathError",
    "AtThresholdError",
    "InvalidPredictionError",
    "FixedPointError",
    "stieltjes_m",
    "stieltjes_m_prime",
    "fixed_point_t",
    "spectral_state",
    "theory_test_error",
    "ridgeless_test_error",
    "THRESHOLD_GUARD",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# ridgeless queries closer than this to the interpolation threshold phi = p
# are rejected: both regime branches diverge there
THRESHOLD_GUARD = 1e-3


class RidgelessPathError(ValueError):
    """lam <= 0 reached a ridge-only routine; route through ridgeless_test_error."""


class AtThresholdError(ValueError):
    """Ridgeless query too close to the interpolation threshold phi = p."""


class InvalidPredictionError(ArithmeticError):
    """The moment assembly produced nu0 <= m0^2; no valid error prediction."""


class FixedPointError(ArithmeticError):
    """The damped fixed-point iteration did not reach tolerance."""


@dataclass(frozen=True)
class RegimeParams:
    """One asymptotic regime: overparametrization, ridge penalty, keep probability."""

    phi: float
    lam: float
    keep_prob: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.phi) and self.phi > 0.0):
            raise ValueError(f"phi must be a positive real, got {self.phi!r}")
        if not (math.isfinite(self.lam) and self.lam >= 0.0):
            raise ValueError(f"lam must be a nonnegative real, got {self.lam!r}")
        if not (0.0 < self.keep_prob <= 1.0):
            raise ValueError(f"keep_prob must lie in (0, 1], got {self.keep_prob!r}")


@dataclass(frozen=True)
class SpectralState:
    """Stieltjes values, companions, derivatives, and mixed moments at z = -lam."""

    m: float
    m_prime: float
    s: float
    m_tilde: float
    m_tilde_prime: float
    omega: float
    omega_tilde: float
    r_mean: float
    r_var: float
    r_var_prime: float


@dataclass(frozen=True)
class TheoryPrediction:
    """Asymptotic test-error prediction Phi(-m0 / sqrt(nu0 - m0^2)).

    regime is "ridge" for lam > 0 and "ridgeless_under" / "ridgeless_over"
    for the lam -> 0 limit with phi < p / phi > p.  In "ridgeless_over" the
    stored m0 and nu0 are the finite scaled limits (-z) m0 and z^2 nu0; the
    test_error formula is invariant under that common rescaling.

    test_error_alt re-assembles the first moment with squared mixing weights
    (omega^2, omega_tilde^2) instead of first powers; the two assemblies
    disagree in general and the primary fields follow the derivation that
    matches simulation.  a_compact / b_compact / test_error_compact hold the
    one-line ridgeless constants (only on ridgeless paths); they coincide
    with the primary prediction only when beta_tilde = rho * beta.
    """

    m0: float
    nu0: float
    test_error: float
    regime: str
    test_error_alt: float | None = None
    a_compact: float | None = None
    b_compact: float | None = None
    test_error_compact: float | None = None


def _split_root(params: RegimeParams) -> tuple[float, float]:
    """(m, sqrt(discriminant)) at z = -lam, via cancellation-free branches.

    With A = p - phi + lam the discriminant A^2 + 4 phi lam is strictly
    positive, and the positive root of the defining quadratic is
    2 / (A + sqrt(disc)); for A < 0 the equivalent form
    (sqrt(disc) - A) / (2 phi lam) avoids the subtractive cancellation.
    """
    if params.lam <= 0.0:
        raise RidgelessPathError(
            "stieltjes values need lam > 0; route lam = 0 through ridgeless_test_error"
        )
    a = params.keep_prob - params.phi + params.lam
    disc = a * a + 4.0 * params.phi * params.lam
    root = math.sqrt(disc)
    if a >= 0.0:
        m = 2.0 / (a + root)
    else:
        m = (root - a) / (2.0 * params.phi * params.lam)
    return m, root


def stieltjes_m(params: RegimeParams) -> float:
    """Positive-branch Stieltjes transform m(-lam) of the distorted MP law."""
    return _split_root(params)[0]


def stieltjes_m_prime(params: RegimeParams) -> float:
    """d/dz of the Stieltjes transform at z = -lam (positive for lam > 0).

    Differentiating the defining quadratic gives
    m' = (phi m^2 + m) / sqrt(disc), exact on the chosen branch.
    """
    m, root = _split_root(params)
    return (params.phi * m * m + m) / root


def fixed_point_t(
    params: RegimeParams,
    damping: float = 0.5,
    max_iter: int = 10_000,
    tol: float = 1e-13,
) -> float:
    """Solve t = p - phi + lam*phi/(t + lam) by damped iteration.

    A redundant route to t(z) = z + 1/m(z), kept purely as a cross-check of
    the closed form.  In u = t + lam > 0 the equation reads u = b + lam*phi/u
    with b = p - phi + lam; that map is a contraction at the root only when
    b > 0 (its slope there is lam*phi/u^2 and u^2 = b*u + lam*phi), while the
    algebraically equivalent u = lam*phi/(u - b) is a contraction when b < 0.
    The sign of b therefore selects the stable form, and damping covers the
    marginal region b ~ 0 where either slope approaches -1.
    """
    if params.lam <= 0.0:
        raise RidgelessPathError("fixed_point_t needs lam > 0")
    p, phi, lam = params.keep_prob, params.phi, params.lam
    b = p - phi + lam
    direct = b >= 0.0
    u = b + 1.0 if direct else lam * phi / (1.0 - b)
    scale = max(1.0, abs(p - phi) + lam)
    for _ in range(max_iter):
        target = b + lam * phi / u if direct else lam * phi / (u - b)
        residual = u - target
        if abs(residual) <= tol * scale:
            return u - lam
        u = (1.0 - damping) * u + damping * target
    raise FixedPointError(
        f"fixed-point iteration did not converge within {max_iter} steps; "
        f"last residual {residual:.3e} at phi={phi!r}, lam={lam!r}, p={p!r}"
    )


def _check_scalar_consistency(params: RegimeParams, scalars: StrategyScalars) -> None:
    if abs(scalars.keep_prob - params.keep_prob) > 1e-9:
        raise ValueError(
            f"scalars.keep_prob = {scalars.keep_prob!r} does not match "
            f"params.keep_prob = {params.keep_prob!r}"
        )


def _mixing_weights(scalars: StrategyScalars) -> tuple[float, float]:
    """(omega, omega_tilde) = (sqrt(1-rho^2) beta, rho beta_tilde)."""
    rho = scalars.rho
    root = math.sqrt(max(0.0, 1.0 - rho * rho))
    return root * scalars.beta, rho * scalars.beta_tilde


def spectral_state(params: RegimeParams, scalars: StrategyScalars) -> SpectralState:
    """All spectral quantities entering the test-error prediction at z = -lam.

    Derivatives are analytic from the closed form of m; m~' additionally
    satisfies the identity m~' = m~^2 (1 + gamma phi m' / (1 + phi m)^2),
    which doubles as a redundant cross-check in the tests.
    """
    _check_scalar_consistency(params, scalars)
    m, root = _split_root(params)
    m_prime = (params.phi * m * m + m) / root
    one_plus = 1.0 + params.phi * m
    s = scalars.gamma / one_plus
    m_tilde = 1.0 / (s + params.lam)
    m_tilde_prime = m_tilde * m_tilde * (1.0 + scalars.gamma * params.phi * m_prime / (one_plus * one_plus))
    omega, omega_tilde = _mixing_weights(scalars)
    b2 = scalars.beta * scalars.beta
    bt2 = scalars.beta_tilde * scalars.beta_tilde
    return SpectralState(
        m=m,
        m_prime=m_prime,
        s=s,
        m_tilde=m_tilde,
        m_tilde_prime=m_tilde_prime,
        omega=omega,
        omega_tilde=omega_tilde,
        r_mean=omega * m + omega_tilde * m_tilde,
        r_var=b2 * m + bt2 * m_tilde,
        r_var_prime=b2 * m_prime + bt2 * m_tilde_prime,
    )


def _gaussian_error(m0: float, nu0: float) -> float:
    return float(ndtr(-m0 / math.sqrt(nu0 - m0 * m0)))


def theory_test_error(params: RegimeParams, scalars: StrategyScalars) -> TheoryPrediction:
    """Asymptotic test error of the ridge classifier at lam > 0.

    m0 mixes the first moments with first-power weights (omega, omega_tilde);
    nu0 mixes the second moments with squared scalars (beta^2, beta_tilde^2).
    The squared-weight re-assembly of m0 is reported as test_error_alt for
    comparison; only the primary assembly is invariant in rho for KeepAll.
    """
    state = spectral_state(params, scalars)
    p, phi = params.keep_prob, params.phi
    m0 = SQRT_2_OVER_PI * state.r_mean
    correction = 2.0 * phi * state.m_prime / (1.0 + phi * state.m)
    nu0 = p * phi * state.m_prime + state.r_var_prime - correction * state.r_var
    if not nu0 > m0 * m0:
        raise InvalidPredictionError(
            f"nu0 = {nu0!r} <= m0^2 = {m0 * m0!r} at phi={phi!r}, lam={params.lam!r}, "
            f"p={p!r}: no valid error prediction"
        )
    r_alt = state.omega**2 * state.m + state.omega_tilde**2 * state.m_tilde
    r_alt_prime = state.omega**2 * state.m_prime + state.omega_tilde**2 * state.m_tilde_prime
    m0_alt = SQRT_2_OVER_PI * r_alt
    nu0_alt = p * phi * state.m_prime + r_alt_prime - correction * r_alt
    alt = _gaussian_error(m0_alt, nu0_alt) if nu0_alt > m0_alt * m0_alt else None
    return TheoryPrediction(
        m0=m0,
        nu0=nu0,
        test_error=_gaussian_error(m0, nu0),
        regime="ridge",
        test_error_alt=alt,
    )


def ridgeless_test_error(scalars: StrategyScalars, phi: float, keep_prob: float) -> TheoryPrediction:
    """lam -> 0 limit of the test-error prediction, away from phi = p.

    Regime A (phi < p): the kept design stays full rank; all spectral limits
    are finite and the prediction is assembled exactly as for ridge.
    Regime B (phi > p): m itself diverges like 1/lam, so the finite limits of
    (-z) m0 and z^2 nu0 are assembled instead; the error formula is invariant
    under that rescaling.  The compact one-line constants are also evaluated
    and reported (a_compact, b_compact); they match the primary assembly only
    when beta_tilde = rho * beta.
    """
    if not (math.isfinite(phi) and phi > 0.0):
        raise ValueError(f"phi must be a positive real, got {phi!r}")
    if not (0.0 < keep_prob <= 1.0):
        raise ValueError(f"keep_prob must lie in (0, 1], got {keep_prob!r}")
    if abs(scalars.keep_prob - keep_prob) > 1e-9:
        raise ValueError(
            f"scalars.keep_prob = {scalars.keep_prob!r} does not match keep_prob = {keep_prob!r}"
        )
    p = keep_prob
    if abs(phi - p) < THRESHOLD_GUARD:
        raise AtThresholdError(
            f"|phi - p| = {abs(phi - p):.2e} < {THRESHOLD_GUARD}: at the interpolation "
            "threshold the ridgeless limits diverge; probe the peak with small lam > 0"
        )
    gamma = scalars.gamma
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive for the ridgeless limits, got {gamma!r}")
    omega, omega_tilde = _mixing_weights(scalars)
    b2 = scalars.beta * scalars.beta
    bt2 = scalars.beta_tilde * scalars.beta_tilde
    rho2 = scalars.rho * scalars.rho

    if phi < p:
        gap = p - phi
        m = 1.0 / gap
        m_tilde = (p / gamma) / gap
        m_prime = p / gap**3
        m_tilde_prime = (p / gamma**2) * (p * gap + phi * gamma) / gap**3
        correction = 2.0 * phi / (gap * gap)  # limit of 2 phi m' / (1 + phi m)
        m0 = SQRT_2_OVER_PI * (omega * m + omega_tilde * m_tilde)
        nu0 = (
            p * phi * m_prime
            + b2 * m_prime
            + bt2 * m_tilde_prime
            - correction * (b2 * m + bt2 * m_tilde)
        )
        regime = "ridgeless_under"
        r0 = 1.0 - rho2 + rho2 * p / gamma
        r0_prime = p * (1.0 - rho2 + rho2 * (gap * p / gamma**2 + phi / gamma))
        a_compact = scalars.beta * SQRT_2_OVER_PI * r0 / gap
        b_compact = (p * p * phi + b2 * (r0_prime - 2.0 * phi * r0)) / gap**3
    else:
        c0 = 1.0 - p / phi
        u = gamma / phi + c0
        # finite limits of (-z) m0 and z^2 nu0
        m0 = SQRT_2_OVER_PI * c0 * (omega + omega_tilde / u)
        r_var0 = b2 + bt2 / u
        nu0 = c0 * (p * phi - r_var0)
        regime = "ridgeless_over"
        r0 = 1.0 - rho2 + rho2 / u
        a_compact = scalars.beta * SQRT_2_OVER_PI * c0 * r0
        b_compact = c0 * (p * phi - b2 * r0)

    if not nu0 > m0 * m0:
        raise InvalidPredictionError(
            f"nu0 = {nu0!r} <= m0^2 = {m0 * m0!r} in {regime} at phi={phi!r}, p={p!r}"
        )
    compact_err = (
        _gaussian_error(a_compact, b_compact) if b_compact > a_compact * a_compact else None
    )
    return TheoryPrediction(
        m0=m0,
        nu0=nu0,
        test_error=_gaussian_error(m0, nu0),
        regime=regime,
        a_compact=a_compact,
        b_compact=b_compact,
        test_error_compact=compact_err,
    )
