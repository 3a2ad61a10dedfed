"""Estimators for simulated runs: sample ACF, length histograms, power-law fits.

The sample ACF uses the raw product mean C_tau = mean(eps_t * eps_{t+tau})
without mean subtraction (the signs are symmetric by construction), computed
in the frequency domain and normalised per lag.  Length histograms are kept
as exact integer counts on their observed support; log-binning happens only
at fit time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .engine import Population, SimulationOutput
from .errors import DomainError, EmptyLog, InsufficientPoints, SeriesTooShort
from .theory import AcfCurve

__all__ = [
    "acf_estimate",
    "acf_direct",
    "average_curves",
    "EmpiricalDistribution",
    "aggregate_metaorder_distribution",
    "aggregated_weights",
    "PowerLawFit",
    "fit_powerlaw",
    "log_bin_curve",
    "log_bin_density",
    "fit_acf_powerlaw",
    "fit_distribution_tail",
]


def _as_signs(series) -> np.ndarray:
    if isinstance(series, SimulationOutput):
        if series.signs is None:
            raise DomainError("run was executed with keep_signs=False")
        return series.signs
    return np.asarray(series)


def acf_estimate(
    series,
    max_lag: int,
    *,
    include_zero: bool = False,
    subtract_mean: bool = False,
) -> AcfCurve:
    """Sample autocorrelation of a sign series up to ``max_lag``.

    Computed as rfft -> squared modulus -> irfft on a zero-padded copy,
    which equals the direct sum Σ_t eps_t eps_{t+tau} / (T - tau) to
    rounding noise.  Requires T > 10 * max_lag so every lag keeps a
    comfortable sample count.  The attached standard error is the
    independent-product approximation 1/sqrt(T - tau).
    """
    x = _as_signs(series)
    t = x.size
    if max_lag < 1:
        raise DomainError(f"max_lag must be >= 1, got {max_lag}")
    if t <= 10 * max_lag:
        raise SeriesTooShort(
            f"series of length {t} too short for max_lag {max_lag}"
        )
    xf = x.astype(np.float64)
    if subtract_mean:
        xf -= xf.mean()
    nfft = scipy.fft.next_fast_len(t + max_lag + 1)
    spectrum = scipy.fft.rfft(xf, nfft)
    np.multiply(spectrum, spectrum.conj(), out=spectrum)
    raw = scipy.fft.irfft(spectrum, nfft)[: max_lag + 1]
    lags = np.arange(0 if include_zero else 1, max_lag + 1, dtype=np.int64)
    values = raw[lags] / (t - lags)
    if include_zero and not subtract_mean:
        values[0] = 1.0  # raw signs are unit magnitude by construction
    stderr = 1.0 / np.sqrt(t - lags.astype(np.float64))
    return AcfCurve(lags=lags, values=values, kind="simulated", stderr=stderr,
                    meta={"steps": t, "replicas": 1})


def acf_direct(series, lags) -> np.ndarray:
    """Direct-sum ACF at selected lags; reference implementation for the FFT path."""
    x = _as_signs(series).astype(np.float64)
    t = x.size
    out = np.empty(len(lags))
    for k, lag in enumerate(lags):
        lag = int(lag)
        if not 0 <= lag < t:
            raise DomainError(f"lag {lag} outside series of length {t}")
        out[k] = np.dot(x[: t - lag], x[lag:]) / (t - lag)
    return out


def average_curves(curves: list[AcfCurve]) -> AcfCurve:
    """Replica average of simulated curves sharing one lag grid."""
    if not curves:
        raise DomainError("need at least one curve")
    lags = curves[0].lags
    for c in curves[1:]:
        if not np.array_equal(c.lags, lags):
            raise DomainError("curves must share the same lag grid")
    k = len(curves)
    values = np.mean([c.values for c in curves], axis=0)
    if all(c.stderr is not None for c in curves):
        stderr = np.sqrt(np.mean([c.stderr**2 for c in curves], axis=0) / k)
    else:
        stderr = None
    steps = sum(c.meta.get("steps", 0) for c in curves)
    return AcfCurve(lags=lags, values=values, kind="simulated", stderr=stderr,
                    meta={"steps": steps, "replicas": k})


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Integer-valued empirical distribution kept as exact counts."""

    support: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if support.shape != counts.shape or support.ndim != 1 or support.size == 0:
            raise DomainError("support and counts must be matching 1-d arrays")
        if np.any(np.diff(support) <= 0):
            raise DomainError("support must be strictly increasing")
        if np.any(counts < 0) or counts.sum() == 0:
            raise DomainError("counts must be non-negative with positive total")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalDistribution":
        samples = np.asarray(samples)
        if samples.size == 0:
            raise EmptyLog("no samples to aggregate")
        support, counts = np.unique(samples, return_counts=True)
        return cls(support=support, counts=counts)

    @classmethod
    def merge(cls, parts: list["EmpiricalDistribution"]) -> "EmpiricalDistribution":
        if not parts:
            raise EmptyLog("nothing to merge")
        support = np.unique(np.concatenate([p.support for p in parts]))
        counts = np.zeros(support.size, dtype=np.int64)
        for p in parts:
            counts[np.searchsorted(support, p.support)] += p.counts
        return cls(support=support, counts=counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def pdf(self) -> np.ndarray:
        return self.counts / self.total

    def ccdf(self) -> np.ndarray:
        """P(X >= support[k]) for each support point."""
        return np.cumsum(self.counts[::-1])[::-1] / self.total

    def ccdf_at(self, value: int) -> float:
        idx = np.searchsorted(self.support, value, side="left")
        tail = self.counts[idx:].sum()
        return float(tail / self.total)


def aggregate_metaorder_distribution(
    output: SimulationOutput, traders=None
) -> EmpiricalDistribution:
    """Pool completed metaorder lengths across traders into one distribution."""
    logs = output.metaorder_log
    ids = range(len(logs)) if traders is None else traders
    parts = [logs[i] for i in ids if logs[i].size]
    if not parts:
        raise EmptyLog("no completed metaorders were logged")
    return EmpiricalDistribution.from_samples(np.concatenate(parts))


def aggregated_weights(population: Population, traders=None) -> np.ndarray:
    """Weights of each trader in the pooled metaorder-length mixture.

    Completed metaorders arrive at rate intensity/mean_length per trader, so
    the pooled distribution mixes the per-trader laws with those rates,
    normalised to unit total.
    """
    ids = list(range(population.size)) if traders is None else list(traders)
    if not ids:
        raise DomainError("need at least one trader")
    rates = np.array(
        [
            population.intensities[i] / population.traders[i].law.mean_length()
            for i in ids
        ]
    )
    return rates / rates.sum()


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares power law y = prefactor * x**(-exponent) in log-log space."""

    exponent: float
    prefactor: float
    residual_rms: float
    n_points: int
    n_excluded: int
    window: tuple


def fit_powerlaw(x, y, window=None, min_points: int = 5) -> PowerLawFit:
    """OLS fit of log y on log x inside a window, excluding non-positive values.

    The returned ``exponent`` is the decay rate (positive for falling
    curves); ``prefactor`` is exp(intercept).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be matching 1-d arrays")
    if window is None:
        window = (float(x.min()), float(x.max())) if x.size else (0.0, 0.0)
    lo, hi = float(window[0]), float(window[1])
    inside = (x >= lo) & (x <= hi)
    usable = inside & (y > 0.0) & (x > 0.0)
    n_excluded = int(inside.sum() - usable.sum())
    if usable.sum() < min_points:
        raise InsufficientPoints(
            f"only {int(usable.sum())} usable points in window [{lo}, {hi}], "
            f"need {min_points}"
        )
    lx = np.log(x[usable])
    ly = np.log(y[usable])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return PowerLawFit(
        exponent=float(-slope),
        prefactor=float(math.exp(intercept)),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        n_points=int(usable.sum()),
        n_excluded=n_excluded,
        window=(lo, hi),
    )


def log_bin_curve(x, y, bins_per_decade: int = 8, window=None):
    """Average a curve inside geometric bins; returns (x_centre, y_mean, n_in_bin).

    Bin centres are the geometric means of the member x values, y is their
    arithmetic mean; empty bins are dropped.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if window is not None:
        keep = (x >= window[0]) & (x <= window[1])
        x, y = x[keep], y[keep]
    if x.size == 0:
        raise InsufficientPoints("no points to bin")
    lo, hi = x.min(), x.max()
    n_bins = max(1, int(np.ceil((np.log10(hi) - np.log10(lo)) * bins_per_decade)))
    edges = np.logspace(np.log10(lo), np.log10(hi), n_bins + 1)
    edges[-1] *= 1.0 + 1e-12
    which = np.digitize(x, edges) - 1
    xs, ys, ns = [], [], []
    for b in range(n_bins):
        sel = which == b
        if not np.any(sel):
            continue
        xs.append(np.exp(np.mean(np.log(x[sel]))))
        ys.append(np.mean(y[sel]))
        ns.append(int(sel.sum()))
    return np.array(xs), np.array(ys), np.array(ns)


def log_bin_density(dist: EmpiricalDistribution, bins_per_decade: int = 8,
                    window=None):
    """Log-binned probability density of an integer distribution.

    Each bin reports (total count in bin) / (total * number of integers in
    the bin): the average per-integer mass, directly comparable to a PMF.
    """
    support = dist.support.astype(np.float64)
    counts = dist.counts
    if window is not None:
        keep = (support >= window[0]) & (support <= window[1])
        support, counts = support[keep], counts[keep]
    if support.size == 0:
        raise InsufficientPoints("no support points to bin")
    lo, hi = support.min(), support.max()
    n_bins = max(1, int(np.ceil((np.log10(hi) - np.log10(lo)) * bins_per_decade)))
    edges = np.logspace(np.log10(lo), np.log10(hi), n_bins + 1)
    edges[-1] *= 1.0 + 1e-12
    which = np.digitize(support, edges) - 1
    xs, dens = [], []
    total = dist.total
    for b in range(n_bins):
        sel = which == b
        if not np.any(sel):
            continue
        lo_int = math.ceil(edges[b])
        hi_int = math.floor(min(edges[b + 1], hi) * (1.0 + 1e-15))
        width = max(1, hi_int - lo_int + 1)
        xs.append(np.exp(np.mean(np.log(support[sel]))))
        dens.append(counts[sel].sum() / (total * width))
    return np.array(xs), np.array(dens)


def fit_acf_powerlaw(curve: AcfCurve, window, bins_per_decade: int = 8,
                     min_points: int = 5) -> PowerLawFit:
    """Log-bin an ACF curve inside a lag window, then fit the power law."""
    x, y, _ = log_bin_curve(curve.lags, curve.values, bins_per_decade, window)
    return fit_powerlaw(x, y, window=None, min_points=min_points)


def fit_distribution_tail(dist: EmpiricalDistribution, window,
                          bins_per_decade: int = 8,
                          min_points: int = 5) -> PowerLawFit:
    """Log-bin the PMF of a length distribution in a window, then fit its decay."""
    x, dens = log_bin_density(dist, bins_per_decade, window)
    return fit_powerlaw(x, dens, window=None, min_points=min_points)
