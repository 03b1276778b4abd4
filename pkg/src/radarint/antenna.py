"""Planar (azimuth-only) antenna gain patterns.

Two models are provided: the ideal cone, with constant gain ``4 pi / phi**2``
inside the beamwidth and zero outside, and the azimuth cut through boresight
of a uniform rectangular array of isotropic elements. Angles are measured
from boresight in radians.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import optimize

from .errors import DomainError


def wrap_angle(x):
    """Map angles to (-pi, pi]; values already in range pass through unchanged."""
    x = np.asarray(x, dtype=float)
    inside = (x > -np.pi) & (x <= np.pi)
    return np.where(inside, x, np.pi - np.mod(np.pi - x, 2 * np.pi))


@dataclass(frozen=True)
class Cone:
    phi: float

    def __post_init__(self):
        if not 0 < self.phi <= 2 * math.pi:
            raise DomainError(f"beamwidth must lie in (0, 2pi], got {self.phi}")

    @property
    def peak_gain(self) -> float:
        return 4 * math.pi / self.phi**2

    @property
    def support(self) -> float:
        """Half-width of the angular region with nonzero gain."""
        return min(self.phi / 2, math.pi)

    def gain(self, theta):
        theta = np.abs(wrap_angle(theta))
        return np.where(theta <= self.phi / 2, self.peak_gain, 0.0)


@dataclass(frozen=True)
class PlanarArray:
    """Azimuth cut of an N x N uniform array of isotropic elements.

    The cut through boresight is the N-element linear array factor
    ``sin(N psi / 2) / (N sin(psi / 2))`` with ``psi = 2 pi s sin(theta)``.
    With ``back_baffled`` the rear half-plane is suppressed, as for a panel
    mounted on a ground plane; otherwise the pattern has a mirror main lobe
    at ``theta = pi``. The peak gain is set to ``4 pi / hpbw**2`` so that the
    pattern is comparable with a cone of the same half-power beamwidth.

    ``sidelobe_floor_db`` is the nominal first-sidelobe level the pattern is
    meant to represent; the measured level is available as
    :attr:`sidelobe_level_db` and is not forced to match.
    """

    elements_per_side: int = 4
    spacing_wavelengths: float = 0.5
    sidelobe_floor_db: float = -10.0
    back_baffled: bool = True
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.elements_per_side < 1:
            raise DomainError("elements_per_side must be >= 1")
        if not self.spacing_wavelengths > 0:
            raise DomainError("spacing_wavelengths must be positive")

    @property
    def support(self) -> float:
        return math.pi / 2 if self.back_baffled else math.pi

    def array_factor(self, theta):
        """Normalised array factor (peak 1 at boresight)."""
        n = self.elements_per_side
        psi = 2 * np.pi * self.spacing_wavelengths * np.sin(np.asarray(theta, dtype=float))
        half = np.sin(psi / 2)
        small = np.abs(half) < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            af = np.sin(n * psi / 2) / (n * np.where(small, 1.0, half))
        # At psi = 2 pi k the factor tends to (+/-1)**(k (n - 1)); only k = 0 is visible for s <= 1/2.
        af = np.where(small, np.cos(n * psi / 2) / np.cos(psi / 2), af)
        return af

    def power_pattern(self, theta):
        theta = wrap_angle(theta)
        p = self.array_factor(theta) ** 2
        if self.back_baffled:
            p = np.where(np.abs(theta) <= np.pi / 2, p, 0.0)
        return p

    @property
    def half_power_beamwidth(self) -> float:
        if "hpbw" not in self._cache:
            grid = np.linspace(0, self.support, 20001)
            below = np.flatnonzero(self.power_pattern(grid) < 0.5)
            if below.size == 0:
                raise DomainError("pattern never drops to half power")
            hi = grid[below[0]]
            edge = optimize.brentq(
                lambda t: self.power_pattern(t) - 0.5, 0.0, hi, xtol=1e-15, rtol=1e-14
            )
            self._cache["hpbw"] = 2 * edge
        return self._cache["hpbw"]

    @property
    def peak_gain(self) -> float:
        return 4 * math.pi / self.half_power_beamwidth**2

    @property
    def sidelobe_level_db(self) -> float:
        """Highest local maximum outside the main lobe, in dB relative to the peak."""
        if "sll" not in self._cache:
            grid = np.linspace(0, self.support, 200001)
            p = self.power_pattern(grid)
            interior = (p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:])
            peaks = p[1:-1][interior]
            peaks = peaks[peaks < 1 - 1e-9]
            self._cache["sll"] = 10 * math.log10(peaks.max()) if peaks.size else -math.inf
        return self._cache["sll"]

    def gain(self, theta):
        return self.peak_gain * self.power_pattern(theta)


AntennaPattern = Cone | PlanarArray


def gain(pattern: AntennaPattern, theta):
    return pattern.gain(theta)


def aligned_link_gain(tx_boresight, rx_boresight, tx_pos, rx_pos, pattern: AntennaPattern):
    """Product of transmit and receive gains along the line joining two radars.

    Positions are ``(..., 2)`` arrays; boresights are absolute azimuths.
    Broadcasts over leading dimensions.
    """
    tx_pos = np.asarray(tx_pos, dtype=float)
    rx_pos = np.asarray(rx_pos, dtype=float)
    delta = rx_pos - tx_pos
    if np.any(np.hypot(delta[..., 0], delta[..., 1]) == 0):
        raise DomainError("transmitter and receiver positions coincide")
    toward_rx = np.arctan2(delta[..., 1], delta[..., 0])
    g_tx = pattern.gain(toward_rx - np.asarray(tx_boresight))
    g_rx = pattern.gain(toward_rx + np.pi - np.asarray(rx_boresight))
    out = g_tx * g_rx
    return float(out) if np.ndim(out) == 0 else out


def pattern_metadata(pattern: AntennaPattern) -> dict:
    if isinstance(pattern, Cone):
        return {"kind": "cone", "phi": pattern.phi, "peak_gain": pattern.peak_gain}
    return {
        "kind": "planar_array",
        "elements_per_side": pattern.elements_per_side,
        "spacing_wavelengths": pattern.spacing_wavelengths,
        "back_baffled": pattern.back_baffled,
        "nominal_sidelobe_db": pattern.sidelobe_floor_db,
        "measured_sidelobe_db": pattern.sidelobe_level_db,
        "half_power_beamwidth": pattern.half_power_beamwidth,
        "peak_gain": pattern.peak_gain,
    }


def write_pattern_csv(pattern: AntennaPattern, path, points: int = 3601) -> None:
    theta = np.linspace(-np.pi, np.pi, points)
    g = pattern.gain(theta)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta_rad", "theta_deg", "gain_linear"])
        for t, v in zip(theta, g):
            w.writerow([repr(float(t)), repr(math.degrees(t)), repr(float(v))])
