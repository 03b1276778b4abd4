"""Closed-form interference and detection statistics for a planar field of pulsed radars.

Every function here is a pure function of its arguments. Powers are in watts,
distances in metres, angles in radians and frequencies in hertz.

The strongest-interferer model gives the per-slot interference CDF

    F(i) = exp(-c * i**(-2/alpha)),   c = lam * delta * phi**2 * Omega * omega**(2/alpha) / (4 pi)

from which the detection threshold, the critical range and the detection
probabilities follow. ``alpha == 2`` is accepted as a limit mode: the closed
forms stay finite there, but the aggregate interference of an unbounded
field does not (see :mod:`radarint.field`).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, NumericalError

SPEED_OF_LIGHT = 299_792_458.0
BOLTZMANN = 1.380649e-23

PD_RTOL = 1e-9
NOISE_CDF_RTOL = 1e-8
ROOT_RTOL = 1e-8


class Fading(str, enum.Enum):
    NONE = "none"
    RAYLEIGH = "rayleigh"


@dataclass(frozen=True)
class RadarParams:
    """System parameters of the radar network.

    Defaults are the reference setting used throughout: 60 GHz, 10 dBm,
    ``phi = pi/6``, ``lam = 1e-4`` radars/m^2, ``delta = 1/100``,
    ``kappa = sigma = 10`` and ``pfa = 0.1`` in the ``alpha -> 2`` limit.

    Parameters
    ----------
    lam : float
        Radar intensity in radars per m^2.
    cycle : int
        Cycle length M in slots; the pulse repetition frequency is ``1/M``.
    phi : float
        Antenna beamwidth in radians.
    alpha : float
        Path-loss exponent. ``alpha == 2`` selects limit mode.
    pt : float
        Transmit power in watts.
    freq : float
        Carrier frequency in hertz.
    kappa : float
        Processing gain (linear).
    sigma : float
        Radar cross section in m^2.
    pfa : float
        Target false-alarm probability.
    fading : Fading
        Fading model for both interference and echo.
    """

    lam: float = 1e-4
    cycle: int = 100
    phi: float = math.pi / 6
    alpha: float = 2.0
    pt: float = 0.01
    freq: float = 60e9
    kappa: float = 10.0
    sigma: float = 10.0
    pfa: float = 0.1
    fading: Fading = Fading.NONE

    def __post_init__(self):
        object.__setattr__(self, "fading", Fading(self.fading))
        if int(self.cycle) != self.cycle or self.cycle < 2:
            raise DomainError(f"cycle must be an integer >= 2, got {self.cycle}")
        object.__setattr__(self, "cycle", int(self.cycle))
        if not self.alpha >= 2:
            raise DomainError(f"alpha must be > 2 (or exactly 2 in limit mode), got {self.alpha}")
        if not 0 < self.phi <= 2 * math.pi:
            raise DomainError(f"phi must lie in (0, 2pi], got {self.phi}")
        if not self.lam >= 0:
            raise DomainError(f"lam must be >= 0, got {self.lam}")
        if not 0 < self.pfa < 1:
            raise DomainError(f"pfa must lie in (0, 1), got {self.pfa}")
        for name in ("pt", "freq", "kappa", "sigma"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def from_delta(cls, delta: float, **kwargs) -> "RadarParams":
        """Build parameters from a pulse repetition frequency ``delta = 1/M``."""
        cycle = round(1 / delta)
        if not math.isclose(cycle * delta, 1.0, rel_tol=1e-12):
            raise DomainError(f"delta must be 1/M for an integer M, got {delta}")
        return cls(cycle=cycle, **kwargs)

    @property
    def delta(self) -> float:
        return 1.0 / self.cycle

    @property
    def limit_mode(self) -> bool:
        return self.alpha == 2

    @property
    def peak_gain(self) -> float:
        return 4 * math.pi / self.phi**2

    def replace(self, **changes) -> "RadarParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedConstants:
    ell: float
    gain: float
    omega: float
    Omega: float


@dataclass(frozen=True)
class NoiseParams:
    """Receiver noise: ``pn = k_B * temp * bandwidth * noise_figure``."""

    temp: float = 290.0
    bandwidth: float = 125e6
    noise_figure: float = 10.0

    def __post_init__(self):
        for name in ("temp", "bandwidth", "noise_figure"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be non-negative, got {getattr(self, name)}")

    @property
    def pn(self) -> float:
        return noise_power(self)


def _scalar(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def path_factor(freq: float) -> float:
    return (SPEED_OF_LIGHT / (4 * math.pi * freq)) ** 2


def omega_factor(alpha: float, fading: Fading | str) -> float:
    """Fading correction ``E[zeta**(2/alpha)]``: 1 without fading, Gamma(1 + 2/alpha) under Rayleigh."""
    if not alpha >= 2:
        raise DomainError(f"alpha must be > 2 (or 2 in limit mode), got {alpha}")
    if Fading(fading) is Fading.NONE:
        return 1.0
    return math.gamma(1 + 2 / alpha)


def derived(p: RadarParams) -> DerivedConstants:
    ell = path_factor(p.freq)
    gain = p.peak_gain
    return DerivedConstants(
        ell=ell, gain=gain, omega=p.pt * gain**2 * ell, Omega=omega_factor(p.alpha, p.fading)
    )


def echo_power(d, zeta, p: RadarParams):
    """Received target echo power at distance ``d`` for fading draw ``zeta``."""
    d = np.asarray(d, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if np.any(d <= 0):
        raise DomainError("target distance must be positive")
    if np.any(zeta < 0):
        raise DomainError("fading draw must be non-negative")
    omega = derived(p).omega
    return _scalar(omega * p.kappa * p.sigma * zeta * d ** (-2 * p.alpha) / (4 * math.pi))


def interference_scale(p: RadarParams) -> float:
    """The constant ``c`` with ``F(i) = exp(-c * i**(-2/alpha))``."""
    k = derived(p)
    return p.lam * p.delta * p.phi**2 * k.Omega * k.omega ** (2 / p.alpha) / (4 * math.pi)


def _log_strongest_cdf(i, c: float, alpha: float):
    i = np.asarray(i, dtype=float)
    if c == 0:
        return np.zeros_like(i)
    with np.errstate(divide="ignore"):
        return np.where(i > 0, -c * np.where(i > 0, i, 1.0) ** (-2 / alpha), -np.inf)


def strongest_cdf(i, p: RadarParams):
    """CDF of the strongest interferer power over one slot.

    ``i = 0`` returns the limit value 0 (1 for an empty field); negative powers
    raise :class:`DomainError`.
    """
    i = np.asarray(i, dtype=float)
    if np.any(i < 0):
        raise DomainError("interference power must be non-negative")
    return _scalar(np.exp(_log_strongest_cdf(i, interference_scale(p), p.alpha)))


def strongest_logcdf(i, p: RadarParams):
    """Natural log of :func:`strongest_cdf`.

    Keeps full relative precision in the upper tail, where the CDF itself
    rounds to 1 in double precision.
    """
    i = np.asarray(i, dtype=float)
    if np.any(i < 0):
        raise DomainError("interference power must be non-negative")
    return _scalar(_log_strongest_cdf(i, interference_scale(p), p.alpha))


def strongest_pdf(i, p: RadarParams):
    i = np.asarray(i, dtype=float)
    if np.any(i < 0):
        raise DomainError("interference power must be non-negative")
    c = interference_scale(p)
    a = 2 / p.alpha
    safe = np.where(i > 0, i, 1.0)
    dens = np.exp(_log_strongest_cdf(safe, c, p.alpha)) * c * a * safe ** (-a - 1)
    return _scalar(np.where(i > 0, dens, 0.0))


def strongest_quantile(u: float, p: RadarParams) -> float:
    """Inverse of :func:`strongest_cdf` for ``0 < u < 1``."""
    if not 0 < u < 1:
        raise DomainError(f"quantile level must lie in (0, 1), got {u}")
    c = interference_scale(p)
    if c == 0:
        return 0.0
    return (c / -math.log(u)) ** (p.alpha / 2)


def slot_exceedance(pfa: float, cycle: int) -> float:
    """Per-slot exceedance ``1 - (1 - pfa)**(1/(M-1))`` matching a cycle false-alarm rate."""
    if pfa == 0:
        return 0.0
    return -math.expm1(math.log1p(-pfa) / (cycle - 1))


def listen_quantile(p: RadarParams) -> float:
    """Per-slot interference quantile ``q = (1 - pfa)**(1/(M-1))`` the threshold sits at."""
    return math.exp(math.log1p(-p.pfa) / (p.cycle - 1))


def _threshold_ratio(p: RadarParams, omega_factor_value: float) -> float:
    # Theta / omega, without the omega factor.
    return (
        -omega_factor_value * (1 - p.delta) * p.lam * p.phi**2 / (4 * math.pi * math.log1p(-p.pfa))
    ) ** (p.alpha / 2)


def detection_threshold(p: RadarParams) -> float:
    """Threshold meeting the target false-alarm rate under the strongest-interferer model."""
    if p.lam == 0:
        raise DomainError(
            "no interference-limited threshold for an empty field; use threshold_noise_only"
        )
    k = derived(p)
    return k.omega * _threshold_ratio(p, k.Omega)


def max_range_nofading(p: RadarParams) -> float:
    """Critical distance where the echo power equals the threshold (no fading).

    Independent of transmit power and carrier frequency.
    """
    if p.fading is not Fading.NONE:
        raise DomainError("critical range is defined for the no-fading case; use range_at_pd")
    if p.lam == 0:
        raise DomainError("no interference-limited range for an empty field")
    return (p.kappa * p.sigma / (4 * math.pi)) ** (1 / (2 * p.alpha)) * (
        -4 * math.pi * math.log1p(-p.pfa) / ((1 - p.delta) * p.lam * p.phi**2)
    ) ** 0.25


def pd_floor(p: RadarParams) -> float:
    """Detection probability as the echo vanishes: the interference alone crosses the threshold."""
    return slot_exceedance(p.pfa, p.cycle)


def pd_nofading(d, p: RadarParams):
    """Detection probability ``1 - F(Theta - S)``; exactly 1 once ``S >= Theta``."""
    if p.fading is not Fading.NONE:
        raise DomainError("pd_nofading requires fading=none")
    theta = detection_threshold(p)
    s = np.asarray(echo_power(d, 1.0, p))
    gap = np.maximum(theta - s, 0.0)
    miss = np.exp(_log_strongest_cdf(gap, interference_scale(p), p.alpha))
    return _scalar(np.where(s >= theta, 1.0, 1.0 - miss))


def _quad(func, a, b, points, rtol, what):
    pts = sorted({x for x in points if a < x < b})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(
            func, a, b, points=pts or None, epsabs=0.0, epsrel=rtol, limit=1000
        )
    if not math.isfinite(val) or err > rtol * abs(val) + 1e-300:
        raise NumericalError(
            f"{what}: quadrature reached relative error {err / max(abs(val), 1e-300):.3g}",
            achieved=err,
            requested=rtol,
        )
    return val


def _echo_ratio(d: float, p: RadarParams) -> float:
    # Theta / mean echo power, with omega cancelled analytically.
    Omega = omega_factor(p.alpha, p.fading)
    return 4 * math.pi * d ** (2 * p.alpha) / (p.kappa * p.sigma) * _threshold_ratio(p, Omega)


def _rayleigh_detection(ratio: float, t0: float, alpha: float, rtol: float) -> float:
    """P{zeta * S + I_s >= Theta} with ``ratio = Theta / S`` and ``t0 = -ln F(Theta)``.

    With ``t = c * i**(-2/alpha)`` the density ``f(i) di`` becomes ``exp(-t) dt``
    and ``(Theta - i)/Theta = 1 - (t0/t)**(alpha/2)``; ``s = t - t0`` shifts the
    lower limit to zero.
    """
    half = alpha / 2

    def integrand(s):
        return math.exp(-s + ratio * math.expm1(-half * math.log1p(s / t0)))

    points = [t0 * f for f in (1, 10, 100, 1000)] + [1.0, 5.0, 20.0]
    if ratio > 0:
        points += [t0 / (half * ratio) * f for f in (1, 10, 100)]
    body = _quad(integrand, 0.0, 60.0, points, rtol, "detection integral")
    q = math.exp(-t0)
    return (1 - q) + q * body


def pd_rayleigh(d, p: RadarParams, rtol: float = PD_RTOL):
    """Detection probability under Rayleigh fading of echo and interference.

    Evaluates ``1 - F(Theta) + int_0^Theta exp(-(Theta - i) / S) f(i) di`` by
    adaptive quadrature, with ``S`` the mean echo power at distance ``d``.
    """
    if p.fading is not Fading.RAYLEIGH:
        raise DomainError("pd_rayleigh requires fading=rayleigh")
    if p.lam == 0:
        raise DomainError("pd_rayleigh requires lam > 0")
    d_arr = np.atleast_1d(np.asarray(d, dtype=float))
    if np.any(d_arr <= 0):
        raise DomainError("target distance must be positive")
    t0 = -math.log1p(-p.pfa) / (p.cycle - 1)
    out = np.array([_rayleigh_detection(_echo_ratio(x, p), t0, p.alpha, rtol) for x in d_arr])
    return float(out[0]) if np.ndim(d) == 0 else out


def range_at_pd(p: RadarParams, level: float = 0.5) -> float:
    """Distance at which the analytic detection probability equals ``level``."""
    floor = pd_floor(p)
    if not floor < level < 1:
        raise DomainError(f"level must lie in ({floor:.4g}, 1), got {level}")
    if p.fading is Fading.NONE:
        theta = detection_threshold(p)
        gap = strongest_quantile(1 - level, p)
        echo = theta - gap
        k = derived(p)
        return (k.omega * p.kappa * p.sigma / (4 * math.pi * echo)) ** (1 / (2 * p.alpha))
    t0 = -math.log1p(-p.pfa) / (p.cycle - 1)
    unit = _echo_ratio(1.0, p)

    def gap(log_ratio):
        return _rayleigh_detection(math.exp(log_ratio), t0, p.alpha, PD_RTOL) - level

    lo, hi = -40.0, 40.0
    if gap(lo) <= 0 or gap(hi) >= 0:
        raise NumericalError("detection level not bracketed", requested=level)
    log_ratio = optimize.brentq(gap, lo, hi, xtol=1e-13, rtol=1e-13)
    return (math.exp(log_ratio) / unit) ** (1 / (2 * p.alpha))


def noise_power(n: NoiseParams) -> float:
    return BOLTZMANN * n.temp * n.bandwidth * n.noise_figure


def _noise_breakpoints(z: float, c: float, alpha: float, pn: float):
    pts = [pn * f for f in (0.1, 1, 10, 40)]
    if c > 0:
        scale = c ** (alpha / 2)
        pts += [z - scale * 10.0**k for k in range(-3, 7)]
    return pts


def _check_noise(n: NoiseParams) -> float:
    pn = noise_power(n)
    if not pn > 0:
        raise DomainError("noise power must be positive")
    return pn


def cdf_noise_plus_interference(z: float, p: RadarParams, n: NoiseParams, rtol: float = NOISE_CDF_RTOL) -> float:
    """CDF of noise plus strongest interference, by convolution with the exponential noise law."""
    if z < 0:
        raise DomainError("power must be non-negative")
    if z == 0:
        return 0.0
    pn = _check_noise(n)
    c = interference_scale(p)
    a = 2 / p.alpha

    def integrand(w):
        x = z - w
        if x <= 0:
            return 0.0
        return math.exp(-c * x ** (-a) - w / pn) / pn

    return _quad(integrand, 0.0, z, _noise_breakpoints(z, c, p.alpha, pn), rtol, "noise CDF")


def ccdf_noise_plus_interference(z: float, p: RadarParams, n: NoiseParams, rtol: float = NOISE_CDF_RTOL) -> float:
    """Complement ``1 - F_Z(z)``, integrated directly to keep relative accuracy in the tail."""
    if z < 0:
        raise DomainError("power must be non-negative")
    pn = _check_noise(n)
    c = interference_scale(p)
    a = 2 / p.alpha
    noise_tail = math.exp(-z / pn)
    if z == 0 or c == 0:
        return 1.0 if z == 0 else noise_tail

    def integrand(w):
        x = z - w
        if x <= 0:
            return math.exp(-w / pn) / pn
        return -math.expm1(-c * x ** (-a)) * math.exp(-w / pn) / pn

    body = _quad(integrand, 0.0, z, _noise_breakpoints(z, c, p.alpha, pn), rtol, "noise tail")
    return noise_tail + body


def threshold_noise_only(p: RadarParams, n: NoiseParams) -> float:
    """Threshold meeting the false-alarm target with exponential noise and no interference."""
    return -noise_power(n) * math.log(slot_exceedance(p.pfa, p.cycle))


def threshold_with_noise(p: RadarParams, n: NoiseParams, rtol: float = ROOT_RTOL) -> float:
    """Solve ``1 - F_Z(Theta)**(M-1) = pfa`` for noise plus strongest interference."""
    noise_only = threshold_noise_only(p, n)
    if p.lam == 0:
        return noise_only
    pn = _check_noise(n)
    target = slot_exceedance(p.pfa, p.cycle)
    lo = max(noise_only, detection_threshold(p))
    # F_Z(a + b) >= F_I(a) F_W(b): quantiles at sqrt(q) bound the root from above.
    root_q = math.sqrt(listen_quantile(p))
    hi = strongest_quantile(root_q, p) - pn * math.log1p(-root_q)

    def excess(z):
        return math.log(ccdf_noise_plus_interference(z, p, n)) - math.log(target)

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo < 0 or f_hi > 0:
        raise NumericalError(
            f"threshold not bracketed: excess({lo:.4g})={f_lo:.3g}, excess({hi:.4g})={f_hi:.3g}",
            requested=rtol,
        )
    if f_lo == 0:
        return lo
    root, info = optimize.brentq(
        excess, lo, hi, xtol=lo * 1e-15, rtol=rtol * 1e-2, full_output=True
    )
    if not info.converged:
        raise NumericalError("threshold root did not converge", requested=rtol)
    return root


def _range_for_threshold(theta: float, p: RadarParams) -> float:
    k = derived(p)
    return (p.kappa * p.sigma * k.omega / (4 * math.pi * theta)) ** (1 / (2 * p.alpha))


def max_range_with_noise(p: RadarParams, n: NoiseParams) -> float:
    return _range_for_threshold(threshold_with_noise(p, n), p)


def max_range_noise_only(p: RadarParams, n: NoiseParams) -> float:
    k = derived(p)
    floor = slot_exceedance(p.pfa, p.cycle)
    return (
        -p.pt * k.gain**2 * p.kappa * p.sigma * k.ell
        / (4 * math.pi * noise_power(n) * math.log(floor))
    ) ** (1 / (2 * p.alpha))
