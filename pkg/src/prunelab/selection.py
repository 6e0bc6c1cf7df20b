"""Selection strategies and their scalar statistics under the Gaussian measure.

A selection strategy is a symmetric keep-probability function q(t) applied to
the projection t = x^T w_s of a data point onto a unit "pruning direction"
w_s.  The asymptotic theory of the spectral module consumes a strategy only
through a handful of one-dimensional expectations against G ~ N(0, 1):

    p          = E[q(G)]                  keep probability
    gamma      = E[q(G) G^2]              kept second moment along w_s
    beta       = 2 E[q(G) pdf(tau G)]
    beta_tilde = 2 E[q(G) cdf(tau G) G]

with tau = rho / sqrt(1 - rho^2), where rho is the cosine between w_s and
the true labeling direction.  KeepHard / KeepEasy / KeepAll admit closed
forms; SigmoidPower is evaluated by quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "SelectionStrategy",
    "StrategyScalars",
    "NoClosedFormError",
    "keep_all",
    "keep_hard",
    "keep_easy",
    "sigmoid_power",
    "parse_strategy",
    "format_strategy",
    "threshold_for_keep_prob",
    "eval_q",
    "scalars_closed_form",
    "scalars_quadrature",
    "strategy_scalars",
    "mean_vector_coeffs",
    "strategy_keep_prob",
    "validate_rho",
    "gauss_pdf",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)
PDF0 = 1.0 / SQRT_2PI  # standard normal density at 0

# |rho| this close to (but not equal to) 1 makes tau = rho/sqrt(1-rho^2)
# numerically meaningless; such inputs are rejected rather than rounded.
RHO_GUARD = 1e-9

_KINDS = ("all", "kh", "ke", "sig")


class NoClosedFormError(ValueError):
    """The strategy's scalars have no closed form; use quadrature."""


def gauss_pdf(x):
    """Standard normal density, elementwise."""
    return np.exp(-0.5 * np.square(x)) / SQRT_2PI


def validate_rho(rho: float) -> float:
    """Validate an alignment cosine; reject the near-unit danger zone."""
    rho = float(rho)
    if not math.isfinite(rho) or abs(rho) > 1.0:
        raise ValueError(f"alignment rho must lie in [-1, 1], got {rho!r}")
    if 1.0 - RHO_GUARD < abs(rho) < 1.0:
        raise ValueError(
            f"|rho| = {abs(rho)!r} is inside the rejected band (1 - 1e-9, 1); "
            "use rho = +/-1 exactly or a value farther from the boundary"
        )
    return rho


@dataclass(frozen=True)
class SelectionStrategy:
    """A symmetric keep-probability function q(t).

    kind
        "all"  keep everything, q = 1;
        "kh"   keep hard: q(t) = 1 iff |t| <= xi (near the boundary);
        "ke"   keep easy: q(t) = 1 iff |t| >  xi (far from the boundary);
        "sig"  smooth interpolation: q(t) = [4 sigma(t)(1 - sigma(t))]^exponent,
               normalized so sup q = 1; exponent 0 recovers "all".
    """

    kind: str
    xi: float | None = None
    exponent: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind in ("kh", "ke"):
            if self.xi is None:
                raise ValueError(f"strategy {self.kind!r} requires a threshold xi")
            object.__setattr__(self, "xi", float(self.xi))
            if math.isnan(self.xi) or self.xi < 0.0:
                raise ValueError(f"threshold xi must be nonnegative, got {self.xi!r}")
            if self.exponent is not None:
                raise ValueError("exponent applies only to kind='sig'")
        elif self.kind == "sig":
            if self.exponent is None:
                raise ValueError("strategy 'sig' requires an exponent")
            object.__setattr__(self, "exponent", float(self.exponent))
            if not math.isfinite(self.exponent) or self.exponent < 0.0:
                raise ValueError(
                    "sigmoid exponent must be a finite nonnegative real (the sup-1 "
                    f"normalization is undefined for negative powers), got {self.exponent!r}"
                )
            if self.xi is not None:
                raise ValueError("threshold xi applies only to kinds 'kh'/'ke'")
        else:  # "all"
            if self.xi is not None or self.exponent is not None:
                raise ValueError("kind 'all' takes no parameters")

    @property
    def label(self) -> str:
        return format_strategy(self)


def keep_all() -> SelectionStrategy:
    return SelectionStrategy("all")


def keep_hard(xi: float) -> SelectionStrategy:
    return SelectionStrategy("kh", xi=xi)


def keep_easy(xi: float) -> SelectionStrategy:
    return SelectionStrategy("ke", xi=xi)


def sigmoid_power(exponent: float) -> SelectionStrategy:
    return SelectionStrategy("sig", exponent=exponent)


def format_strategy(strategy: SelectionStrategy) -> str:
    """Serialize to the flat text form: kh:xi=1.0, ke:xi=0.5, sig:w=2.0, all."""
    if strategy.kind == "all":
        return "all"
    if strategy.kind in ("kh", "ke"):
        return f"{strategy.kind}:xi={strategy.xi!r}"
    return f"sig:w={strategy.exponent!r}"


def parse_strategy(text: str) -> SelectionStrategy:
    """Parse the flat text form produced by format_strategy."""
    text = text.strip()
    if text == "all":
        return keep_all()
    head, sep, arg = text.partition(":")
    if not sep:
        raise ValueError(f"malformed strategy {text!r}: expected 'all', 'kh:xi=..', 'ke:xi=..', or 'sig:w=..'")
    key, sep, value = arg.partition("=")
    if not sep:
        raise ValueError(f"malformed strategy {text!r}: missing '=' in parameter")
    try:
        value_f = float(value)
    except ValueError:
        raise ValueError(f"malformed strategy {text!r}: bad numeric value {value!r}") from None
    if head in ("kh", "ke") and key == "xi":
        return SelectionStrategy(head, xi=value_f)
    if head == "sig" and key == "w":
        return sigmoid_power(value_f)
    raise ValueError(f"malformed strategy {text!r}: unknown form {head}:{key}")


def threshold_for_keep_prob(kind: str, p: float) -> float:
    """Threshold xi making a kh/ke strategy keep a fraction p of examples."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"keep probability must lie in (0, 1], got {p!r}")
    if kind == "kh":
        return math.inf if p == 1.0 else float(ndtri((1.0 + p) / 2.0))
    if kind == "ke":
        return float(ndtri(1.0 - p / 2.0))
    raise ValueError(f"keep-probability threshold applies to 'kh'/'ke' only, got {kind!r}")


def eval_q(strategy: SelectionStrategy, t):
    """Keep probability q(t); vectorized over t, values in [0, 1]."""
    arr = np.asarray(t, dtype=float)
    if strategy.kind == "all":
        out = np.ones_like(arr)
    elif strategy.kind == "kh":
        out = (np.abs(arr) <= strategy.xi).astype(float)
    elif strategy.kind == "ke":
        out = (np.abs(arr) > strategy.xi).astype(float)
    else:
        # 4 sigma(t) sigma(-t) = 4 e^{-|t|} / (1 + e^{-|t|})^2, stable for all t,
        # equals 1 at t = 0; the power keeps values in [0, 1] for exponent >= 0.
        u = np.exp(-np.abs(arr))
        base = 4.0 * u / np.square(1.0 + u)
        with np.errstate(invalid="ignore"):
            out = np.power(base, strategy.exponent)
        if strategy.exponent == 0.0:
            out = np.ones_like(arr)
    if np.isscalar(t) or arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class StrategyScalars:
    """The sufficient statistics of a strategy at alignment rho."""

    keep_prob: float
    rho: float
    tau: float
    gamma: float
    beta: float
    beta_tilde: float


def _kh_base_moments(xi: float) -> tuple[float, float]:
    """(p, gamma) for keep-hard at threshold xi."""
    if math.isinf(xi):
        return 1.0, 1.0
    p = 2.0 * float(ndtr(xi)) - 1.0
    gamma = p - 2.0 * xi * float(gauss_pdf(xi))
    return p, gamma


def _abs_first_moment_closed(strategy: SelectionStrategy) -> float:
    """E[q(G)|G|] for the strategies with closed forms."""
    if strategy.kind == "all":
        return 2.0 * PDF0
    if strategy.kind == "kh":
        pdf_xi = 0.0 if math.isinf(strategy.xi) else float(gauss_pdf(strategy.xi))
        return 2.0 * (PDF0 - pdf_xi)
    if strategy.kind == "ke":
        return 2.0 * float(gauss_pdf(strategy.xi))
    raise NoClosedFormError("E[q|G|] has no closed form for 'sig'; use quadrature")


def _unit_rho_scalars(strategy: SelectionStrategy, rho: float, nodes: int = 128) -> StrategyScalars:
    """Scalars at |rho| = 1: beta = 0 and beta_tilde = sign(rho) E[q|G|]."""
    sign = 1.0 if rho > 0 else -1.0
    try:
        abs_moment = _abs_first_moment_closed(strategy)
    except NoClosedFormError:
        z, w = _strategy_nodes(strategy, nodes)
        abs_moment = float(np.sum(w * eval_q(strategy, z) * np.abs(z)))
    if strategy.kind == "sig":
        p, gamma = _smooth_base_moments(strategy, nodes)
    else:
        p, gamma = _binary_base_moments(strategy)
    return StrategyScalars(
        keep_prob=p,
        rho=rho,
        tau=sign * math.inf,
        gamma=gamma,
        beta=0.0,
        beta_tilde=sign * abs_moment,
    )


def _binary_base_moments(strategy: SelectionStrategy) -> tuple[float, float]:
    if strategy.kind == "all":
        return 1.0, 1.0
    p_kh, g_kh = _kh_base_moments(strategy.xi)
    if strategy.kind == "kh":
        return p_kh, g_kh
    return 1.0 - p_kh, 1.0 - g_kh


def scalars_closed_form(strategy: SelectionStrategy, rho: float) -> StrategyScalars:
    """Closed-form scalars for KeepAll / KeepHard / KeepEasy.

    Raises NoClosedFormError for SigmoidPower.  |rho| = 1 is served by the
    dedicated boundary branch (beta = 0, beta_tilde = sign(rho) E[q|G|]).
    """
    rho = validate_rho(rho)
    if strategy.kind == "sig":
        raise NoClosedFormError("SigmoidPower scalars have no closed form; use scalars_quadrature")
    if abs(rho) == 1.0:
        return _unit_rho_scalars(strategy, rho)

    tau = rho / math.sqrt(1.0 - rho * rho)
    root = math.sqrt(1.0 - rho * rho)
    beta_all = 2.0 * PDF0 * root
    beta_tilde_all = 2.0 * rho * PDF0
    if strategy.kind == "all":
        return StrategyScalars(1.0, rho, tau, 1.0, beta_all, beta_tilde_all)

    xi = strategy.xi
    p_kh, gamma_kh = _kh_base_moments(xi)
    if math.isinf(xi):
        eps1 = 1.0
        pdf_xi = 0.0
        beta_kh = beta_all
        beta_tilde_kh = beta_tilde_all
    else:
        eps1 = 2.0 * float(ndtr(xi / root)) - 1.0
        pdf_xi = float(gauss_pdf(xi))
        eps2 = 2.0 * float(ndtr(tau * xi)) - 1.0
        beta_kh = beta_all * eps1
        beta_tilde_kh = 2.0 * (rho * PDF0 * eps1 - pdf_xi * eps2)

    if strategy.kind == "kh":
        return StrategyScalars(p_kh, rho, tau, gamma_kh, beta_kh, beta_tilde_kh)
    # keep-easy: complement of keep-hard since q_ke = 1 - q_kh
    return StrategyScalars(
        keep_prob=1.0 - p_kh,
        rho=rho,
        tau=tau,
        gamma=1.0 - gamma_kh,
        beta=beta_all - beta_kh,
        beta_tilde=beta_tilde_all - beta_tilde_kh,
    )


def _legendre_panel(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [a, b], weights folded with the normal pdf."""
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    z = mid + half * x
    return z, half * w * gauss_pdf(z)

def _panelized_nodes(segments: list[tuple[float, float]], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Panels of width <= 2 covering the segments (spectral accuracy per panel)."""
    zs, ws = [], []
    for a, b in segments:
        pieces = max(1, math.ceil((b - a) / 2.0))
        edges = np.linspace(a, b, pieces + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            z, w = _legendre_panel(float(lo), float(hi), n)
            zs.append(z)
            ws.append(w)
    return np.concatenate(zs), np.concatenate(ws)

# beyond this many standard deviations the normal tail is negligible at the
# 1e-30 level, far below every tolerance used downstream
_TAIL = 12.0

def _strategy_nodes(strategy: SelectionStrategy, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes z and weights w with sum_i w_i f(z_i) ~ E[f(G) 1{support}].

    Smooth strategies use Gauss-Hermite in the standard-normal change of
    variables; the kh/ke indicators are integrated exactly by splitting the
    axis at +/-xi into Gauss-Legendre panels, so no node straddles the jump.
    """
    if strategy.kind in ("all", "sig") or math.isinf(strategy.xi):
        x, w = np.polynomial.hermite.hermgauss(nodes)
        return x * math.sqrt(2.0), w / math.sqrt(math.pi)
    xi = strategy.xi
    if strategy.kind == "kh":
        if xi == 0.0:
            return np.array([]), np.array([])
        segments = [(-xi, xi)]
    else:
        b = xi + _TAIL
        segments = [(-b, -xi), (xi, b)]
    return _panelized_nodes(segments, nodes)


def _smooth_base_moments(strategy: SelectionStrategy, nodes: int) -> tuple[float, float]:
    z, w = _strategy_nodes(strategy, nodes)
    q = eval_q(strategy, z)
    return float(np.sum(w * q)), float(np.sum(w * q * z * z))


def scalars_quadrature(strategy: SelectionStrategy, rho: float, nodes: int = 128) -> StrategyScalars:
    """Scalars by numerical quadrature against the standard normal weight.

    Requires |rho| < 1 (the boundary is served by the closed special branch in
    strategy_scalars / mean_vector_coeffs) and nodes >= 32.
    """
    rho = validate_rho(rho)
    if abs(rho) >= 1.0:
        raise ValueError("scalars_quadrature requires |rho| < 1; use strategy_scalars at the boundary")
    if nodes < 32:
        raise ValueError(f"need at least 32 quadrature nodes, got {nodes}")
    tau = rho / math.sqrt(1.0 - rho * rho)
    z, w = _strategy_nodes(strategy, nodes)
    if z.size == 0:
        return StrategyScalars(0.0, rho, tau, 0.0, 0.0, 0.0)
    q = eval_q(strategy, z)
    wq = w * q
    return StrategyScalars(
        keep_prob=float(np.sum(wq)),
        rho=rho,
        tau=tau,
        gamma=float(np.sum(wq * z * z)),
        beta=float(np.sum(wq * 2.0 * gauss_pdf(tau * z))),
        beta_tilde=float(np.sum(wq * 2.0 * ndtr(tau * z) * z)),
    )


def strategy_scalars(strategy: SelectionStrategy, rho: float, nodes: int = 128) -> StrategyScalars:
    """Scalars via the best available path: closed form, else quadrature."""
    rho = validate_rho(rho)
    if abs(rho) == 1.0:
        return _unit_rho_scalars(strategy, rho, nodes)
    try:
        return scalars_closed_form(strategy, rho)
    except NoClosedFormError:
        return scalars_quadrature(strategy, rho, nodes)


def strategy_keep_prob(strategy: SelectionStrategy, nodes: int = 128) -> float:
    """Keep probability p = E[q(G)] alone."""
    if strategy.kind == "sig":
        return _smooth_base_moments(strategy, nodes)[0]
    return _binary_base_moments(strategy)[0]


def mean_vector_coeffs(strategy: SelectionStrategy, rho: float, nodes: int = 128) -> tuple[float, float]:
    """Coefficients (beta_tilde, beta) of the kept class mean c = beta_tilde u + beta v.

    u is the unit pruning direction and v completes the plane spanned with the
    labeling direction.  At rho = +/-1 the plane collapses and the boundary
    branch returns (sign(rho) E[q|G|], 0).
    """
    scalars = strategy_scalars(strategy, rho, nodes)
    return scalars.beta_tilde, scalars.beta
