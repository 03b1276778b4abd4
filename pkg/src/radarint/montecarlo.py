"""Monte Carlo threshold calibration and detection estimates.

The simulation mirrors the analytic pipeline with the full aggregate
interference in place of its strongest term: draw many independent slots,
set the threshold at the per-slot quantile that meets the false-alarm target,
then score detections of a target at distance ``d`` against fresh slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .analytic import (
    Fading,
    RadarParams,
    derived,
    detection_threshold,
    listen_quantile,
)
from .antenna import AntennaPattern
from .errors import DomainError, NumericalError
from .field import sample_slot_interference, window_radius
from .rng import as_stream

CONFIDENCE = 0.99
Z_SCORE = float(stats.norm.ppf(0.5 + CONFIDENCE / 2))
MIN_TAIL_SAMPLES = 100
DEFAULT_CALIBRATION_SAMPLES = 100_000
DEFAULT_TRIALS = 10_000


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample of per-slot interference powers.

    ``strongest`` optionally carries the strongest-term sample drawn from the
    same slots.
    """

    samples: np.ndarray
    strongest: "EmpiricalDistribution | None" = None

    @classmethod
    def from_samples(cls, values, strongest=None) -> "EmpiricalDistribution":
        values = np.sort(np.asarray(values, dtype=float))
        if strongest is not None and not isinstance(strongest, EmpiricalDistribution):
            strongest = cls.from_samples(strongest)
        return cls(values, strongest)

    @property
    def count(self) -> int:
        return int(self.samples.size)

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.count

    def quantile(self, q: float) -> float:
        """Lower (inverse-CDF) quantile: the smallest sample with ``cdf >= q``."""
        if not 0 <= q <= 1:
            raise DomainError(f"quantile level must lie in [0, 1], got {q}")
        if self.count == 0:
            raise DomainError("empty distribution")
        k = max(1, math.ceil(q * self.count - 1e-9))
        return float(self.samples[k - 1])


@dataclass(frozen=True)
class Estimate:
    value: float
    ci_low: float
    ci_high: float
    trials: int

    def contains(self, x: float) -> bool:
        return self.ci_low <= x <= self.ci_high


def wilson_interval(successes: int, trials: int, z: float = Z_SCORE) -> tuple[float, float]:
    if trials <= 0:
        raise DomainError("trials must be positive")
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def proportion(successes: int, trials: int) -> Estimate:
    lo, hi = wilson_interval(successes, trials)
    value = successes / trials
    return Estimate(value, min(lo, value), max(hi, value), trials)


def _echo_scale(p: RadarParams, pattern: AntennaPattern) -> float:
    # Mean echo power times d**(2 alpha); the target sits on the receiver boresight.
    return p.pt * pattern.peak_gain**2 * derived(p).ell * p.kappa * p.sigma / (4 * math.pi)


def default_radius(p: RadarParams) -> float:
    if p.lam == 0:
        return 1.0
    return window_radius(p, detection_threshold(p))


def required_samples(p: RadarParams) -> int:
    """Smallest sample size leaving at least 100 draws above the calibration quantile."""
    return math.ceil(MIN_TAIL_SAMPLES / (1 - listen_quantile(p)) - 1e-9)


def collect_interference(p: RadarParams, pattern: AntennaPattern, n_samples: int, rng,
                         radius: float | None = None, workers: int = 1) -> EmpiricalDistribution:
    """Per-slot aggregate interference over ``n_samples`` independent fields.

    The strongest-term sample of the same slots is attached as ``.strongest``.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    radius = default_radius(p) if radius is None else radius
    draws = sample_slot_interference(p, pattern, n_samples, radius, as_stream(rng), workers)
    return EmpiricalDistribution.from_samples(draws.aggregate, strongest=draws.strongest)


def calibrate_threshold(dist: EmpiricalDistribution, p: RadarParams) -> float:
    """Empirical threshold meeting the false-alarm target: the per-slot ``q``-quantile."""
    need = required_samples(p)
    if dist.count < need:
        raise DomainError(
            f"calibration needs at least {need} samples for pfa={p.pfa}, M={p.cycle}; got {dist.count}"
        )
    return dist.quantile(listen_quantile(p))


def threshold_bounds(dist: EmpiricalDistribution, p: RadarParams, z: float = Z_SCORE) -> tuple[float, float]:
    """Distribution-free 99% interval for the calibrated threshold.

    The rank of the true ``q``-quantile among ``n`` samples is binomial, so the
    order statistics ``z`` standard deviations either side bracket it.
    """
    calibrate_threshold(dist, p)
    n = dist.count
    q = listen_quantile(p)
    spread = z * math.sqrt(n * q * (1 - q))
    lo = max(1, math.floor(n * q - spread))
    hi = min(n, math.ceil(n * q + spread) + 1)
    return float(dist.samples[lo - 1]), float(dist.samples[hi - 1])


@dataclass(frozen=True)
class DetectionTrials:
    """Echo-slot interference and echo fading for a batch of detection cycles.

    Scoring the same batch at several distances gives a detection curve that is
    monotone in distance (common random numbers).
    """

    interference: np.ndarray
    echo_fading: np.ndarray
    echo_scale: float
    alpha: float
    strongest: np.ndarray | None = None

    def strongest_only(self) -> "DetectionTrials":
        """The same cycles with each slot's interference cut to its strongest term."""
        if self.strongest is None:
            raise DomainError("strongest-term interference was not retained")
        return replace(self, interference=self.strongest, strongest=None)

    @property
    def count(self) -> int:
        return int(self.interference.size)

    def detections(self, d: float, theta: float) -> int:
        if d <= 0:
            raise DomainError("target distance must be positive")
        echo = self.echo_scale * d ** (-2 * self.alpha) * self.echo_fading
        return int(np.count_nonzero(echo + self.interference >= theta))

    def estimate(self, d: float, theta: float) -> Estimate:
        return proportion(self.detections(d, theta), self.count)

    def estimate_calibrated(self, d: float, theta: float, bounds: tuple[float, float]) -> Estimate:
        """Estimate at a calibrated ``theta`` whose own interval is ``bounds``.

        The interval runs from the Wilson lower bound at the high threshold to
        the Wilson upper bound at the low one.
        """
        n = self.count
        low = wilson_interval(self.detections(d, bounds[1]), n)[0]
        high = wilson_interval(self.detections(d, bounds[0]), n)[1]
        value = self.detections(d, theta) / n
        return Estimate(value, min(low, value), max(high, value), n)


def detection_trials(p: RadarParams, pattern: AntennaPattern, trials: int, rng,
                     radius: float | None = None, workers: int = 1) -> DetectionTrials:
    if trials < 1:
        raise DomainError("trials must be >= 1")
    stream = as_stream(rng)
    radius = default_radius(p) if radius is None else radius
    draws = sample_slot_interference(p, pattern, trials, radius, stream.child(0), workers)
    if p.fading is Fading.RAYLEIGH:
        fading = stream.child(1).generator().exponential(size=trials)
    else:
        fading = np.ones(trials)
    return DetectionTrials(draws.aggregate, fading, _echo_scale(p, pattern), p.alpha, draws.strongest)


def estimate_pd(d: float, theta: float, p: RadarParams, pattern: AntennaPattern, trials: int, rng,
                radius: float | None = None, workers: int = 1) -> Estimate:
    """Fraction of cycles whose echo slot carries ``S + I >= theta``, with a 99% Wilson interval."""
    return detection_trials(p, pattern, trials, rng, radius, workers).estimate(d, theta)


def estimate_false_alarm(theta: float, p: RadarParams, pattern: AntennaPattern, cycles: int, rng,
                         radius: float | None = None, workers: int = 1) -> Estimate:
    """Fraction of target-free cycles in which any of the ``M - 1`` listening slots reaches ``theta``."""
    if cycles < 1:
        raise DomainError("cycles must be >= 1")
    radius = default_radius(p) if radius is None else radius
    slots = p.cycle - 1
    draws = sample_slot_interference(p, pattern, cycles * slots, radius, as_stream(rng), workers)
    alarms = (draws.aggregate.reshape(cycles, slots) >= theta).any(axis=1)
    return proportion(int(alarms.sum()), cycles)


def _crossing(fraction, level, lo, hi, rtol):
    """Bisect (in log distance) for where a nonincreasing ``fraction(d)`` drops below ``level``."""
    if fraction(lo) < level:
        raise NumericalError(f"detection rate at {lo:.4g} m is already below {level}")
    if fraction(hi) >= level:
        raise NumericalError(f"detection rate at {hi:.4g} m still reaches {level}")
    while hi / lo - 1 > rtol:
        mid = math.sqrt(lo * hi)
        if fraction(mid) >= level:
            lo = mid
        else:
            hi = mid
    return lo, hi


def estimate_dm(theta: float, p: RadarParams, pattern: AntennaPattern, rng, level: float = 0.5,
                trials: int = DEFAULT_TRIALS, rtol: float = 0.01, radius: float | None = None,
                workers: int = 1, batch: DetectionTrials | None = None,
                theta_bounds: tuple[float, float] | None = None) -> Estimate:
    """Distance at which the simulated detection rate falls through ``level``.

    Bisection runs on one batch of cycles scored at every candidate distance.
    The interval spans the crossings of the upper and lower Wilson bounds,
    widened by the final bisection bracket. Passing ``theta_bounds`` (from
    :func:`threshold_bounds`) folds the calibration uncertainty in as well.
    """
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    radius = default_radius(p) if radius is None else radius
    if batch is None:
        batch = detection_trials(p, pattern, trials, rng, radius, workers)
    n = batch.count
    lo, hi = 0.1, radius
    theta_lo, theta_hi = theta_bounds if theta_bounds is not None else (theta, theta)

    def rate(d):
        return batch.detections(d, theta) / n

    def lower(d):
        return wilson_interval(batch.detections(d, theta_hi), n)[0]

    def upper(d):
        return wilson_interval(batch.detections(d, theta_lo), n)[1]

    mid_lo, mid_hi = _crossing(rate, level, lo, hi, rtol)
    value = math.sqrt(mid_lo * mid_hi)
    try:
        ci_low = _crossing(lower, level, lo, hi, rtol)[0]
    except NumericalError:
        ci_low = lo
    try:
        ci_high = _crossing(upper, level, lo, hi, rtol)[1]
    except NumericalError:
        ci_high = hi
    return Estimate(value, min(ci_low, mid_lo), max(ci_high, mid_hi), n)


def simulated_range(theta: float, p: RadarParams, pattern: AntennaPattern) -> float:
    """Distance at which the unfaded echo equals ``theta`` for the given pattern's peak gain."""
    return (_echo_scale(p, pattern) / theta) ** (1 / (2 * p.alpha))
