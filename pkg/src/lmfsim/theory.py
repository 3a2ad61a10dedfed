"""Exact and asymptotic sign-autocorrelation theory for splitting populations.

The market sign autocorrelation C_tau decomposes into independent per-trader
contributions.  A trader with intensity lam and length law rho contributes

    C_tau = c_R * lam**2 * [ sum_{R0=2}^{tau} ccdf(R0) * F(tau, R0)
                             + sum_{R0=tau+1}^{inf} ccdf(R0) ],

where c_R = 1/mean_length and F(tau, R0) is the probability that the trader
was selected at most R0 - 1 times in a window of tau steps that starts with
a selection (a shifted binomial CDF).  Everything here evaluates that sum and
its closed-form and asymptotic reductions with explicit error control.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .engine import Population, TraderSpec
from .errors import DegenerateExponent, DomainError, LmfsimError
from .laws import Degenerate, DiscretePareto, Exponential, MetaorderLaw
from .numerics import binom_cdf_prefix, geometric_lags, log_binom_pmf

__all__ = [
    "AcfCurve",
    "ValidityWarning",
    "binomial_pmf",
    "survival_cdf",
    "exact_acf_trader",
    "exact_acf_market",
    "homogeneous_market_acf",
    "heuristic_acf",
    "ExponentialAcf",
    "exponential_acf",
    "exponential_acf_closed_form",
    "powerlaw_acf_asymptote",
    "hetero_acf_asymptote",
    "prefactor_hetero",
    "prefactor_homogeneous",
    "prefactor_upper",
    "superposition_prefactor",
    "superposition_prefactor_homogeneous",
    "superposition_upper",
    "PrefactorReport",
    "prefactor_bounds",
    "min_splitter_count",
    "intensity_superposition_exponent",
    "default_lags",
]

CURVE_KINDS = ("simulated", "exact", "asymptotic", "oracle")


class ValidityWarning(UserWarning):
    """Emitted when a formula is evaluated outside its derivation window."""


@dataclass
class AcfCurve:
    """A sign-autocorrelation curve on an explicit lag grid."""

    lags: np.ndarray
    values: np.ndarray
    kind: str
    stderr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lags = np.asarray(self.lags, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.kind not in CURVE_KINDS:
            raise DomainError(f"kind must be one of {CURVE_KINDS}, got {self.kind!r}")
        if self.lags.shape != self.values.shape or self.lags.ndim != 1:
            raise DomainError("lags and values must be matching 1-d arrays")
        if self.lags.size and (np.any(np.diff(self.lags) <= 0) or self.lags[0] < 0):
            raise DomainError("lags must be non-negative and strictly increasing")
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=np.float64)
            if self.stderr.shape != self.values.shape:
                raise DomainError("stderr must match values")
        if self.kind in ("simulated", "oracle") and self.values.size:
            if np.max(np.abs(self.values)) > 1.0 + 1e-9:
                raise DomainError("sign autocorrelations must lie in [-1, 1]")

    def __len__(self) -> int:
        return self.lags.size


def default_lags(max_lag: int, ratio: float = 1.25) -> np.ndarray:
    """Default geometric lag grid used by the theory evaluators."""
    return geometric_lags(max_lag, ratio)


def _check_intensity(lam: float):
    if not (0.0 < lam <= 1.0):
        raise DomainError(f"intensity must lie in (0, 1], got {lam}")


def binomial_pmf(t: int, lam: float, n) -> np.ndarray | float:
    """Binomial mass P(Binomial(t, lam) = n), evaluated in log space.

    Safe for t up to 1e6 and beyond; n may be a scalar or an array but must
    lie inside [0, t].
    """
    if t < 0:
        raise DomainError(f"trial count must be >= 0, got {t}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {lam}")
    n_arr = np.asarray(n, dtype=np.int64)
    if n_arr.size and (n_arr.min() < 0 or n_arr.max() > t):
        raise DomainError(f"counts must lie in [0, {t}]")
    return np.exp(log_binom_pmf(t, lam, n_arr))


def survival_cdf(lam: float, tau: int, r0: int) -> float:
    """P(selection count over tau steps <= r0 - 1): metaorder survival probability.

    Equals 1 exactly when tau <= r0 - 1 (too few steps to exhaust the
    remaining r0 executions) and the shifted binomial CDF otherwise.
    """
    _check_intensity(lam)
    if tau < 1:
        raise DomainError(f"lag must be >= 1, got {tau}")
    if r0 < 2:
        raise DomainError(f"remaining count must be >= 2, got {r0}")
    if tau <= r0 - 1:
        return 1.0
    return float(binom_cdf_prefix(tau - 1, lam, r0 - 2)[-1])


def _market_sum(lam: float, law: MetaorderLaw, tau: int, r0_min: int) -> float:
    """sum_{R0 >= r0_min} ccdf(R0) * survival, split into finite and tail parts."""
    if tau >= r0_min:
        r0 = np.arange(r0_min, tau + 1, dtype=np.int64)
        cdf_prefix = binom_cdf_prefix(tau - 1, lam, tau - 2)
        finite = float(np.dot(law.ccdf(r0), cdf_prefix[r0 - 2]))
    else:
        finite = 0.0
    return finite + law.ccdf_tail(max(tau + 1, r0_min))


def exact_acf_trader(trader: TraderSpec, lags) -> AcfCurve:
    """Exact per-trader contribution to the market sign autocorrelation.

    Always evaluates the defining double sum (finite binomial-CDF sweep plus
    law tail mass); closed forms live in separate functions so the two routes
    stay independently checkable.
    """
    lags = np.asarray(lags, dtype=np.int64)
    lam = trader.intensity
    if lam == 0.0:
        return AcfCurve(lags=lags, values=np.zeros(lags.shape), kind="exact")
    c_r = 1.0 / trader.law.mean_length()
    values = np.array(
        [c_r * lam * lam * _market_sum(lam, trader.law, int(t), 2) for t in lags]
    )
    return AcfCurve(lags=lags, values=values, kind="exact")


def exact_acf_market(population: Population, lags) -> AcfCurve:
    """Sum of exact per-trader contributions over a population.

    Identical traders are grouped and computed once.  Exponential and
    unit-length traders take their closed forms (verified equal to the
    generic sum elsewhere); everything else goes through the generic sum.
    """
    lags = np.asarray(lags, dtype=np.int64)
    total = np.zeros(lags.shape, dtype=np.float64)
    groups: dict[str, list] = {}
    for i, t in enumerate(population.traders):
        key = f"{population.intensities[i]!r}|{t.law.as_config()!r}"
        if key in groups:
            groups[key][0] += 1
        else:
            groups[key] = [1, float(population.intensities[i]), t.law]
    for count, lam, law in groups.values():
        if isinstance(law, Degenerate):
            continue
        if isinstance(law, Exponential):
            contrib = exponential_acf(lam, law.decay_length).values_at(lags)
        else:
            contrib = exact_acf_trader(TraderSpec(lam, law), lags).values
        total += count * contrib
    return AcfCurve(lags=lags, values=total, kind="exact")


def homogeneous_market_acf(lam: float, law: MetaorderLaw, lags) -> AcfCurve:
    """Market ACF of a homogeneous splitting population with per-trader intensity lam.

    With 1/lam identical traders the market curve is the per-trader
    contribution divided by lam:  (lam / mean_length) * sum_{R0>=2} ccdf * F.
    """
    lags = np.asarray(lags, dtype=np.int64)
    c_r = 1.0 / law.mean_length()
    values = np.array(
        [lam * c_r * _market_sum(lam, law, int(t), 2) for t in lags]
    )
    return AcfCurve(lags=lags, values=values, kind="exact")


def heuristic_acf(lam: float, law: MetaorderLaw, lags) -> AcfCurve:
    """Classic homogeneous splitting heuristic for the market ACF.

    Identical to ``homogeneous_market_acf`` except that the sum over
    remaining counts starts at R0 = 3: the heuristic drops metaorders whose
    remaining count is exactly 2, undercounting every lag by
    (lam/mean) * ccdf(2) * (1-lam)**(tau-1).
    """
    lags = np.asarray(lags, dtype=np.int64)
    c_r = 1.0 / law.mean_length()
    values = np.array(
        [lam * c_r * _market_sum(lam, law, int(t), 3) for t in lags]
    )
    return AcfCurve(lags=lags, values=values, kind="exact")


@dataclass(frozen=True)
class ExponentialAcf:
    """Closed-form per-trader ACF for an exponential law: c * exp(-tau/decay_time)."""

    intensity: float
    decay_length: float
    prefactor: float
    decay_time: float

    def values_at(self, lags) -> np.ndarray:
        lags = np.asarray(lags, dtype=np.float64)
        return self.prefactor * np.exp(-lags / self.decay_time)


def exponential_acf(lam: float, decay_length: float) -> ExponentialAcf:
    """Closed-form ACF parameters for one exponential splitter.

    C_tau = lam**2 * exp(-1/L) * q**(tau-1) with q = 1 - lam*(1 - exp(-1/L)),
    rewritten as prefactor * exp(-tau/decay_time).
    """
    _check_intensity(lam)
    if decay_length <= 0.0:
        raise DomainError(f"decay_length must be positive, got {decay_length}")
    step = -math.expm1(-1.0 / decay_length)  # 1 - exp(-1/L)
    q = 1.0 - lam * step
    decay_time = -1.0 / math.log(q)
    prefactor = lam * lam * math.exp(-1.0 / decay_length) / q
    return ExponentialAcf(
        intensity=lam,
        decay_length=decay_length,
        prefactor=prefactor,
        decay_time=decay_time,
    )


def exponential_acf_closed_form(lam: float, decay_length: float, lags) -> AcfCurve:
    """Closed-form exponential-splitter ACF evaluated on a lag grid."""
    lags = np.asarray(lags, dtype=np.int64)
    return AcfCurve(
        lags=lags,
        values=exponential_acf(lam, decay_length).values_at(lags),
        kind="exact",
    )


def powerlaw_acf_asymptote(lam: float, alpha: float, lags) -> AcfCurve:
    """Large-lag asymptote of one Pareto splitter: (lam**(3-alpha)/alpha) * tau**(1-alpha).

    Derived for alpha in (1, 2); outside that window (and for lags below
    1/lam) the value is still returned but a ValidityWarning is emitted.
    """
    _check_intensity(lam)
    if alpha <= 1.0:
        raise DomainError(f"tail exponent must exceed 1, got {alpha}")
    if alpha >= 2.0:
        warnings.warn(
            f"power-law ACF asymptote derived for exponents in (1, 2); got {alpha}",
            ValidityWarning,
            stacklevel=2,
        )
    lags = np.asarray(lags, dtype=np.int64)
    if lags.size and lags.min() < 1.0 / lam:
        warnings.warn(
            "asymptote evaluated at lags below 1/intensity, outside its window",
            ValidityWarning,
            stacklevel=2,
        )
    values = lam ** (3.0 - alpha) / alpha * lags.astype(np.float64) ** (1.0 - alpha)
    return AcfCurve(lags=lags, values=values, kind="asymptotic")


def hetero_acf_asymptote(population: Population, lags) -> AcfCurve:
    """Superposition asymptote: closed forms for exponential traders plus
    power-law asymptotes for Pareto traders; unit-length traders contribute 0."""
    lags = np.asarray(lags, dtype=np.int64)
    total = np.zeros(lags.shape, dtype=np.float64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        for lam, trader in zip(population.intensities, population.traders):
            law = trader.law
            if isinstance(law, Degenerate):
                continue
            if isinstance(law, Exponential):
                total += exponential_acf(float(lam), law.decay_length).values_at(lags)
            elif isinstance(law, DiscretePareto):
                total += powerlaw_acf_asymptote(
                    float(lam), law.tail_exponent, lags
                ).values
            else:
                raise DomainError(
                    f"no asymptote for law kind {law.kind!r}; use exact_acf_market"
                )
    return AcfCurve(lags=lags, values=total, kind="asymptotic")


# ---------------------------------------------------------------------------
# prefactor algebra
# ---------------------------------------------------------------------------


def _check_pt_exponent(alpha: float):
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"prefactor algebra requires exponent in (1, 2), got {alpha}")


def _check_mass(mu: float):
    if not (0.0 < mu <= 1.0 + 1e-12):
        raise DomainError(f"splitter mass must lie in (0, 1], got {mu}")


def prefactor_hetero(intensities, alpha: float) -> float:
    """Heterogeneous power-law ACF prefactor: sum(lam**(3-alpha)) / alpha."""
    _check_pt_exponent(alpha)
    lam = np.asarray(intensities, dtype=np.float64)
    if lam.size == 0 or np.any(lam <= 0.0):
        raise DomainError("intensities must be positive and non-empty")
    _check_mass(float(lam.sum()))
    return float(np.sum(lam ** (3.0 - alpha)) / alpha)


def prefactor_homogeneous(mu: float, count: int, alpha: float) -> float:
    """Prefactor when the splitter mass mu is split evenly over ``count`` traders."""
    _check_pt_exponent(alpha)
    _check_mass(mu)
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    return mu ** (3.0 - alpha) / (alpha * count ** (2.0 - alpha))


def prefactor_upper(mu: float, alpha: float) -> float:
    """Single-splitter bound mu**(3-alpha)/alpha, the largest reachable prefactor."""
    _check_pt_exponent(alpha)
    _check_mass(mu)
    return mu ** (3.0 - alpha) / alpha


def superposition_prefactor(intensities, theta: float) -> float:
    """Exponential-superposition prefactor Gamma(theta) * sum(lam**(3-theta))."""
    _check_pt_exponent(theta)
    lam = np.asarray(intensities, dtype=np.float64)
    if lam.size == 0 or np.any(lam <= 0.0):
        raise DomainError("intensities must be positive and non-empty")
    _check_mass(float(lam.sum()))
    return float(math.gamma(theta) * np.sum(lam ** (3.0 - theta)))


def superposition_prefactor_homogeneous(mu: float, count: int, theta: float) -> float:
    """Superposition prefactor for mass mu spread evenly over ``count`` traders."""
    _check_pt_exponent(theta)
    _check_mass(mu)
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    return math.gamma(theta) * mu ** (3.0 - theta) / count ** (2.0 - theta)


def superposition_upper(mu: float, theta: float) -> float:
    """Single-trader superposition bound Gamma(theta) * mu**(3-theta)."""
    _check_pt_exponent(theta)
    _check_mass(mu)
    return math.gamma(theta) * mu ** (3.0 - theta)


@dataclass(frozen=True)
class PrefactorReport:
    """Prefactor bounds and identities for one intensity vector."""

    alpha: float
    intensities: tuple
    mu: float
    splitter_count: int
    c0_hetero: float
    c0_homogeneous: float
    c0_upper: float
    q0_hetero: float
    q0_homogeneous: float
    q0_upper: float
    q0_over_c0: float
    slack_lower: float
    slack_upper: float
    is_homogeneous_equality: bool

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "intensities": list(self.intensities),
            "mu": self.mu,
            "splitter_count": self.splitter_count,
            "c0_hetero": self.c0_hetero,
            "c0_homogeneous": self.c0_homogeneous,
            "c0_upper": self.c0_upper,
            "q0_hetero": self.q0_hetero,
            "q0_homogeneous": self.q0_homogeneous,
            "q0_upper": self.q0_upper,
            "q0_over_c0": self.q0_over_c0,
            "slack_lower": self.slack_lower,
            "slack_upper": self.slack_upper,
            "is_homogeneous_equality": self.is_homogeneous_equality,
        }


def prefactor_bounds(intensities, alpha: float) -> PrefactorReport:
    """Full prefactor report with the two-sided bound asserted.

    The heterogeneous prefactor always sits between the evenly-split value
    (power-mean inequality, equality iff all intensities agree) and the
    single-trader bound; violation beyond rounding noise raises.
    """
    lam = np.asarray(intensities, dtype=np.float64)
    c0 = prefactor_hetero(lam, alpha)
    mu = float(lam.sum())
    count = int(lam.size)
    c0_low = prefactor_homogeneous(mu, count, alpha)
    c0_high = prefactor_upper(mu, alpha)
    q0 = superposition_prefactor(lam, alpha)
    q0_low = superposition_prefactor_homogeneous(mu, count, alpha)
    q0_high = superposition_upper(mu, alpha)
    tol = 1e-12 * max(c0, c0_high)
    if c0 < c0_low - tol or c0 > c0_high + tol:
        raise LmfsimError(
            f"prefactor bound violated: {c0_low} <= {c0} <= {c0_high} failed"
        )
    return PrefactorReport(
        alpha=float(alpha),
        intensities=tuple(float(x) for x in lam),
        mu=mu,
        splitter_count=count,
        c0_hetero=c0,
        c0_homogeneous=c0_low,
        c0_upper=c0_high,
        q0_hetero=q0,
        q0_homogeneous=q0_low,
        q0_upper=q0_high,
        q0_over_c0=q0 / c0,
        slack_lower=c0 - c0_low,
        slack_upper=c0_high - c0,
        is_homogeneous_equality=bool(abs(c0 - c0_low) <= 1e-12 * max(c0, c0_low)),
    )


def min_splitter_count(mu: float, alpha: float, c0: float) -> float:
    """Lower bound on the number of splitters from an observed ACF prefactor.

    Inverts the evenly-split prefactor: count >= (mu**(3-alpha)/(alpha*c0))**(1/(2-alpha)).
    The exponent 1/(2-alpha) blows up near alpha = 2, so exponents above 1.95
    are rejected as numerically degenerate.
    """
    _check_mass(mu)
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"tail exponent must lie in (1, 2), got {alpha}")
    if alpha > 1.95:
        raise DegenerateExponent(
            f"1/(2 - alpha) = {1.0 / (2.0 - alpha):.1f} amplifies prefactor noise "
            "beyond usefulness; need alpha <= 1.95"
        )
    if c0 <= 0.0:
        raise DomainError(f"prefactor must be positive, got {c0}")
    return (mu ** (3.0 - alpha) / (alpha * c0)) ** (1.0 / (2.0 - alpha))


def intensity_superposition_exponent(beta: float) -> float:
    """ACF decay exponent 2 - beta for an intensity profile with tail exponent beta.

    Valid when the resulting exponent lies in (0, 2)."""
    gamma = 2.0 - beta
    if not 0.0 < gamma < 2.0:
        raise DomainError(
            f"intensity superposition needs beta in (0, 2), got {beta}"
        )
    return gamma
