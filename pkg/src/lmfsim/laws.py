"""Metaorder length laws and deterministic population allocation rules.

A law describes the distribution of the total child-order count L >= 1 of a
metaorder.  The simulator consumes batched samples, the exact theory consumes
pointwise PMF/CCDF values and tail masses, and stationary initialisation
consumes the size-biased remaining-length distribution

    P_st(R) = ccdf(R) / mean_length,   R = 1, 2, ...

All laws are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    DomainError,
    InvalidExponent,
    InvalidSupport,
    NonconvergentMean,
)
from .numerics import AliasTable, powerlaw_tail_sum

__all__ = [
    "MetaorderLaw",
    "Degenerate",
    "Exponential",
    "DiscretePareto",
    "Tabulated",
    "law_from_config",
    "allocate_decay_lengths",
    "allocate_intensities",
    "intensity_rescale_factor",
]

MAX_TABULATED_LENGTH = 10**6

# Stationary Pareto draws beyond this are clamped so they stay addressable
# as int64 step counts; the clamped mass is below 4e-10 for alpha >= 1.1.
_REMAINING_CAP = 1 << 62


def _check_lengths(length) -> np.ndarray:
    arr = np.asarray(length)
    if arr.size and arr.min() < 1:
        raise DomainError("lengths are integers >= 1")
    return arr


class MetaorderLaw:
    """Common interface for metaorder length distributions."""

    kind: str = "abstract"

    def pmf(self, length):
        """P(L = length); vectorised over integer arrays."""
        raise NotImplementedError

    def ccdf(self, length):
        """P(L >= length), so ``ccdf(1) == 1``; vectorised."""
        raise NotImplementedError

    def mean_length(self) -> float:
        """Expected metaorder length; raises NonconvergentMean if infinite."""
        raise NotImplementedError

    def ccdf_tail(self, start: int) -> float:
        """Sum of ``ccdf(L)`` over ``L >= start`` (tail mass of the CCDF)."""
        raise NotImplementedError

    def sample_length(self, rng: np.random.Generator, size=None):
        """Draw metaorder lengths."""
        raise NotImplementedError

    def sample_stationary_remaining(self, rng: np.random.Generator, size=None):
        """Draw remaining lengths from the size-biased stationary law."""
        raise NotImplementedError

    def stationary_remaining_pdf(self, remaining):
        """P_st(R) = ccdf(R) / mean_length for integer ``remaining >= 1``."""
        rem = _check_lengths(remaining)
        return self.ccdf(rem) / self.mean_length()

    def as_config(self) -> dict:
        raise NotImplementedError

    def _scalar(self, value, size):
        if size is None:
            return int(value[()] if np.ndim(value) else value)
        return value


@dataclass(frozen=True)
class Degenerate(MetaorderLaw):
    """Unit-length metaorders: every execution is its own metaorder."""

    kind = "degenerate"

    def pmf(self, length):
        arr = _check_lengths(length)
        return np.where(arr == 1, 1.0, 0.0)[()]

    def ccdf(self, length):
        arr = _check_lengths(length)
        return np.where(arr <= 1, 1.0, 0.0)[()]

    def mean_length(self) -> float:
        return 1.0

    def ccdf_tail(self, start: int) -> float:
        return 1.0 if start <= 1 else 0.0

    def sample_length(self, rng, size=None):
        return 1 if size is None else np.ones(size, dtype=np.int64)

    def sample_stationary_remaining(self, rng, size=None):
        return self.sample_length(rng, size)

    def as_config(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class Exponential(MetaorderLaw):
    """Geometrically decaying lengths with ``ccdf(L) = exp(-(L-1)/decay_length)``.

    The size-biased stationary remaining length has the same distribution as
    L itself (the discrete-exponential law is memoryless), which the
    stationary sampler exploits.
    """

    decay_length: float
    kind = "exponential"

    def __post_init__(self):
        if not (self.decay_length > 0.0 and math.isfinite(self.decay_length)):
            raise DomainError(f"decay_length must be positive, got {self.decay_length}")

    @property
    def _step_mass(self) -> float:
        # 1 - exp(-1/L*), computed without cancellation for large L*
        return -math.expm1(-1.0 / self.decay_length)

    def pmf(self, length):
        arr = _check_lengths(length)
        return self._step_mass * np.exp(-(arr - 1.0) / self.decay_length)

    def ccdf(self, length):
        arr = _check_lengths(length)
        return np.exp(-(arr - 1.0) / self.decay_length)

    def mean_length(self) -> float:
        return 1.0 / self._step_mass

    def ccdf_tail(self, start: int) -> float:
        if start < 1:
            raise DomainError(f"tail start must be >= 1, got {start}")
        return math.exp(-(start - 1.0) / self.decay_length) / self._step_mass

    def sample_length(self, rng, size=None):
        u = rng.random(size=size)
        # 1 - u is uniform on (0, 1]; floor transform reproduces the CCDF exactly
        draw = 1 + np.floor(-self.decay_length * np.log1p(-u)).astype(np.int64)
        return self._scalar(draw, size)

    def sample_stationary_remaining(self, rng, size=None):
        return self.sample_length(rng, size)

    def as_config(self) -> dict:
        return {"kind": self.kind, "decay_length": self.decay_length}


@dataclass(frozen=True)
class DiscretePareto(MetaorderLaw):
    """Heavy-tailed lengths with ``ccdf(L) = L**(-tail_exponent)``.

    Construction requires ``tail_exponent > 0``; the mean and every
    stationary operation additionally require ``tail_exponent > 1`` and raise
    NonconvergentMean otherwise.
    """

    tail_exponent: float
    kind = "pareto"

    _stationary_cap = 1 << 20

    def __post_init__(self):
        if not (self.tail_exponent > 0.0 and math.isfinite(self.tail_exponent)):
            raise InvalidExponent(
                f"tail_exponent must be positive, got {self.tail_exponent}"
            )

    def pmf(self, length):
        arr = _check_lengths(length).astype(np.float64)
        a = self.tail_exponent
        return arr**-a - (arr + 1.0) ** -a

    def ccdf(self, length):
        arr = _check_lengths(length).astype(np.float64)
        return arr**-self.tail_exponent

    @cached_property
    def _mean(self) -> float:
        return powerlaw_tail_sum(self.tail_exponent, 1)

    def mean_length(self) -> float:
        return self._mean

    def ccdf_tail(self, start: int) -> float:
        return powerlaw_tail_sum(self.tail_exponent, start)

    def sample_length(self, rng, size=None):
        u = rng.random(size=size)
        # floor((1-u)**(-1/alpha)) hits the discrete CCDF exactly
        raw = np.floor((1.0 - u) ** (-1.0 / self.tail_exponent))
        draw = np.minimum(raw, float(_REMAINING_CAP)).astype(np.int64)
        return self._scalar(draw, size)

    @cached_property
    def _stationary_table(self) -> np.ndarray:
        # head CDF of P_st up to the cap; the tail is inverted analytically
        mean = self.mean_length()
        r = np.arange(1, self._stationary_cap + 1, dtype=np.float64)
        return np.cumsum(r**-self.tail_exponent) / mean

    def sample_stationary_remaining(self, rng, size=None):
        mean = self.mean_length()
        n = 1 if size is None else int(size)
        u = rng.random(size=n)
        table = self._stationary_table
        out = np.empty(n, dtype=np.int64)
        head = u < table[-1]
        out[head] = 1 + np.searchsorted(table, u[head], side="right")
        for i in np.nonzero(~head)[0]:
            out[i] = self._invert_stationary_tail((1.0 - u[i]) * mean)
        return int(out[0]) if size is None else out

    def _invert_stationary_tail(self, target: float) -> int:
        """Smallest r > cap with zeta-tail(r + 1) <= target, clamped to int64 range."""
        a = self.tail_exponent
        lo = self._stationary_cap + 1
        hi = lo
        while powerlaw_tail_sum(a, hi + 1) > target:
            hi *= 2
            if hi >= _REMAINING_CAP:
                return _REMAINING_CAP
        while lo < hi:
            mid = (lo + hi) // 2
            if powerlaw_tail_sum(a, mid + 1) <= target:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def as_config(self) -> dict:
        return {"kind": self.kind, "alpha": self.tail_exponent}


@dataclass(frozen=True, eq=False)
class Tabulated(MetaorderLaw):
    """Finite-support law given as explicit (length, probability) atoms.

    Probabilities must be non-negative and sum to 1 within 1e-9; they are
    renormalised to an exact unit total.  Zero-probability atoms are dropped.
    """

    support: np.ndarray
    probs: np.ndarray
    kind = "tabulated"

    def __post_init__(self):
        support = np.asarray(self.support)
        probs = np.asarray(self.probs, dtype=np.float64)
        if support.shape != probs.shape or support.ndim != 1 or support.size == 0:
            raise InvalidSupport("support and probs must be matching 1-d arrays")
        if not np.issubdtype(support.dtype, np.integer):
            if np.any(support != np.floor(support)):
                raise InvalidSupport("support must contain integers")
        support = support.astype(np.int64)
        if support.min() < 1 or support.max() > MAX_TABULATED_LENGTH:
            raise InvalidSupport(
                f"support must lie within [1, {MAX_TABULATED_LENGTH}]"
            )
        if np.unique(support).size != support.size:
            raise InvalidSupport("support values must be distinct")
        if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
            raise InvalidSupport("probabilities must be finite and non-negative")
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise InvalidSupport(f"probabilities sum to {total}, expected 1")
        keep = probs > 0.0
        order = np.argsort(support[keep])
        support = support[keep][order]
        probs = probs[keep][order] / total
        support.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    def pmf(self, length):
        arr = _check_lengths(length)
        idx = np.searchsorted(self.support, arr)
        idx = np.clip(idx, 0, self.support.size - 1)
        hit = self.support[idx] == arr
        return np.where(hit, self.probs[idx], 0.0)[()]

    @cached_property
    def _suffix_mass(self) -> np.ndarray:
        return np.concatenate((np.cumsum(self.probs[::-1])[::-1], [0.0]))

    def ccdf(self, length):
        arr = _check_lengths(length)
        idx = np.searchsorted(self.support, arr, side="left")
        return self._suffix_mass[idx][()]

    def mean_length(self) -> float:
        return float(np.dot(self.support, self.probs))

    def ccdf_tail(self, start: int) -> float:
        if start < 1:
            raise DomainError(f"tail start must be >= 1, got {start}")
        span = np.maximum(0, self.support - start + 1)
        return float(np.dot(span, self.probs))

    @cached_property
    def _alias(self) -> AliasTable:
        return AliasTable.from_weights(self.probs)

    @cached_property
    def _size_biased_alias(self) -> AliasTable:
        return AliasTable.from_weights(self.probs * self.support)

    def sample_length(self, rng, size=None):
        idx = self._alias.draw(rng, size=size)
        return self._scalar(self.support[idx], size)

    def sample_stationary_remaining(self, rng, size=None):
        # size-biased atom, then uniform position inside it:
        # P(R = r) = sum_{s >= r} p_s / mean, the stationary remaining law
        idx = self._size_biased_alias.draw(rng, size=size)
        chosen = self.support[idx]
        draw = rng.integers(1, chosen + 1, size=size)
        return self._scalar(draw, size)

    def as_config(self) -> dict:
        return {
            "kind": self.kind,
            "pmf": [[int(s), float(p)] for s, p in zip(self.support, self.probs)],
        }


def law_from_config(config: dict) -> MetaorderLaw:
    """Build a law from its JSON-style description (see ``as_config``)."""
    if not isinstance(config, dict) or "kind" not in config:
        raise DomainError("law config must be a dict with a 'kind' field")
    kind = config["kind"]
    if kind == "degenerate":
        return Degenerate()
    if kind == "exponential":
        return Exponential(decay_length=float(config["decay_length"]))
    if kind == "pareto":
        return DiscretePareto(tail_exponent=float(config["alpha"]))
    if kind == "tabulated":
        atoms = config["pmf"]
        support = [a[0] for a in atoms]
        probs = [a[1] for a in atoms]
        return Tabulated(support=np.asarray(support), probs=np.asarray(probs))
    raise DomainError(f"unknown law kind {kind!r}")


def allocate_decay_lengths(count: int, theta: float) -> np.ndarray:
    """Deterministic decay lengths whose empirical CCDF falls off as a power law.

    Trader i of ``count`` receives

        decay_length_i = (1 / (1 - (i - 1)/count)) ** (1 / (theta - 1))

    so the multiset has CCDF ``P(decay_length >= x) ~ x**-(theta - 1)`` and the
    largest entry is ``count ** (1/(theta-1))``.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    if theta <= 1.0:
        raise InvalidExponent(f"theta must exceed 1, got {theta}")
    i = np.arange(1, count + 1, dtype=np.float64)
    return (1.0 / (1.0 - (i - 1.0) / count)) ** (1.0 / (theta - 1.0))


def _intensity_quantiles(count: int, beta: float, lam_cut: float) -> np.ndarray:
    """Mid-point quantiles of the density ~ lam**-(beta+1) on [lam_cut, 1]."""
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    if not 0.0 < lam_cut < 1.0:
        raise DomainError(f"lam_cut must lie in (0, 1), got {lam_cut}")
    p = (np.arange(1, count + 1, dtype=np.float64) - 0.5) / count
    if beta == 0.0:
        return lam_cut * (1.0 / lam_cut) ** p
    top = lam_cut**-beta
    return (top - p * (top - 1.0)) ** (-1.0 / beta)


def allocate_intensities(
    count: int, beta: float, lam_cut: float, total_mass: float = 1.0
) -> np.ndarray:
    """Deterministic intensities from a truncated power-law profile.

    Takes the ``count`` mid-point quantiles ``p_i = (i - 1/2)/count`` of the
    density proportional to ``lam**-(beta+1)`` on ``[lam_cut, 1]`` and rescales
    them to the requested total mass.
    """
    if not 0.0 < total_mass <= 1.0:
        raise DomainError(f"total_mass must lie in (0, 1], got {total_mass}")
    lam = _intensity_quantiles(count, beta, lam_cut)
    lam *= total_mass / lam.sum()
    if lam.max() > 1.0:
        raise DomainError("rescaled intensities exceed 1; lower total_mass or count")
    return lam


def intensity_rescale_factor(
    count: int, beta: float, lam_cut: float, total_mass: float = 1.0
) -> float:
    """Factor by which allocate_intensities shrinks the raw quantile profile.

    Every per-trader correlation time stretches by this factor relative to a
    hypothetical population whose intensities sit on [lam_cut, 1] directly,
    so lag windows stated on that reference clock map to windows multiplied
    by the returned value.
    """
    if not 0.0 < total_mass <= 1.0:
        raise DomainError(f"total_mass must lie in (0, 1], got {total_mass}")
    return float(_intensity_quantiles(count, beta, lam_cut).sum() / total_mass)
