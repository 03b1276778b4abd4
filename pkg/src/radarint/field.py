"""Sampling of the marked Poisson field of radars around a typical receiver.

The typical radar sits at the origin. Every other radar carries a position,
a uniform boresight and a uniform slot mark in ``{0, ..., M-1}``; in a given
slot only radars whose mark matches transmit. Two samplers are provided:

* :func:`sample_scene` / :func:`interference_slot` build a full scene, all
  marks included, and evaluate one slot on it. This is the reference path and
  what ``scene-dump`` writes out.
* :func:`sample_slot_interference` draws many independent slots directly. By
  the marking theorem the radars holding a given mark form a Poisson process
  of intensity ``lam * delta``, independent across marks, so a slot of a fresh
  scene can be drawn without materialising the other ``M - 1`` marks. Radars
  outside the receive pattern's support contribute exactly zero and are not
  drawn; the transmit alignment is still decided from explicit boresights.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from .analytic import Fading, RadarParams, derived
from .antenna import AntennaPattern, Cone, aligned_link_gain
from .errors import DomainError, ResourceError
from .rng import Stream, as_stream

log = logging.getLogger(__name__)

WINDOW_EPSILON = 1e-3
WINDOW_SPACINGS = 10.0
MAX_POINTS = 1e8
# Candidate radars handled per vectorised block (bounds peak memory).
BLOCK_CANDIDATES = 1 << 20
MAX_BLOCK_SLOTS = 4096


@dataclass(frozen=True)
class Scene:
    """One realisation of the field inside a disk of ``radius`` around the origin.

    Radar ``k`` is described by ``positions[k]``, ``boresights[k]`` and
    ``marks[k]``; its per-slot fading draws come from ``stream.child(slot)``
    in node order.
    """

    radius: float
    positions: np.ndarray
    boresights: np.ndarray
    marks: np.ndarray
    params: RadarParams
    stream: Stream

    def __len__(self):
        return len(self.marks)


@dataclass(frozen=True)
class InterferenceSample:
    aggregate: float
    strongest: float
    active_count: int


@dataclass(frozen=True)
class SlotDraws:
    """Independent per-slot interference draws (watts) and aligned-interferer counts."""

    aggregate: np.ndarray
    strongest: np.ndarray
    active: np.ndarray
    radius: float
    # Aggregate from radars inside ``inner_radius`` of the same draws (coupled truncation).
    inner: np.ndarray | None = None
    inner_radius: float | None = None


def window_criteria(p: RadarParams, theta_scale: float,
                    epsilon: float = WINDOW_EPSILON, spacings: float = WINDOW_SPACINGS) -> dict:
    """Both truncation radii and which of them binds.

    ``epsilon``: an aligned unit-fading interferer at the edge delivers
    ``epsilon * theta_scale``. ``spacings``: the window spans that many mean
    distances between mutually aligned active interferers.
    """
    if not theta_scale > 0:
        raise DomainError("theta_scale must be positive")
    r_eps = (derived(p).omega / (epsilon * theta_scale)) ** (1 / p.alpha)
    if p.lam > 0:
        aligned = p.lam * p.delta * p.phi**2 / (4 * math.pi**2)
        r_spacing = spacings / math.sqrt(aligned)
    else:
        r_spacing = 0.0
    return {
        "epsilon_radius": r_eps,
        "spacing_radius": r_spacing,
        "binding": "epsilon" if r_eps >= r_spacing else "spacing",
        "radius": max(r_eps, r_spacing),
    }


def window_radius(p: RadarParams, theta_scale: float,
                  epsilon: float = WINDOW_EPSILON, spacings: float = WINDOW_SPACINGS) -> float:
    """Simulation window radius around the typical receiver.

    The larger of the two radii in :func:`window_criteria`. For ``alpha > 2``
    the interference from beyond the window is bounded and shrinks with the
    window; at ``alpha == 2`` the mean far-field contribution grows like
    ``log(radius)``, so aggregate statistics in limit mode depend (weakly) on
    the window. At the reference parameters the spacing rule binds
    (about 1.2e5 m against 7.0e3 m).
    """
    return window_criteria(p, theta_scale, epsilon, spacings)["radius"]


def sample_scene(p: RadarParams, radius: float, rng, max_points: float = MAX_POINTS) -> Scene:
    if not radius > 0:
        raise DomainError("radius must be positive")
    mean = p.lam * math.pi * radius**2
    if mean > max_points:
        raise ResourceError(f"expected {mean:.3g} radars exceeds the cap of {max_points:.3g}")
    stream = as_stream(rng)
    g = stream.child(0).generator()
    n = g.poisson(mean)
    r = radius * np.sqrt(g.random(n))
    ang = g.uniform(0, 2 * np.pi, n)
    positions = np.column_stack((r * np.cos(ang), r * np.sin(ang)))
    boresights = g.uniform(0, 2 * np.pi, n)
    marks = g.integers(0, p.cycle, n)
    return Scene(radius, positions, boresights, marks, p, stream.child(1))


def interference_slot(scene: Scene, slot: int, pattern: AntennaPattern, rx_boresight: float,
                      rng=None) -> InterferenceSample:
    """Interference at the origin from the radars of ``scene`` transmitting in ``slot``.

    Fading draws come from ``rng`` if given, else from the scene's own stream.
    """
    p = scene.params
    if not 0 <= slot < p.cycle:
        raise DomainError(f"slot must lie in [0, {p.cycle}), got {slot}")
    active = scene.marks == slot
    if not active.any():
        return InterferenceSample(0.0, 0.0, 0)
    pos = scene.positions[active]
    gains = aligned_link_gain(scene.boresights[active], rx_boresight, pos, np.zeros(2), pattern)
    gains = np.atleast_1d(gains)
    k = derived(p)
    power = p.pt * k.ell * gains * np.hypot(pos[:, 0], pos[:, 1]) ** (-p.alpha)
    if p.fading is Fading.RAYLEIGH:
        stream = as_stream(rng) if rng is not None else scene.stream
        power = power * stream.child(slot).generator().exponential(size=power.size)
    return InterferenceSample(float(power.sum()), float(power.max()), int((gains > 0).sum()))


def _block_plan(p: RadarParams, pattern: AntennaPattern, radius: float, n_slots: int):
    arc = pattern.support / math.pi
    per_slot = p.lam * p.delta * arc * math.pi * radius**2
    if per_slot > MAX_POINTS:
        raise ResourceError(f"expected {per_slot:.3g} candidate radars per slot exceeds the cap")
    size = int(min(MAX_BLOCK_SLOTS, max(1, BLOCK_CANDIDATES // max(per_slot, 1.0))))
    starts = list(range(0, n_slots, size))
    return per_slot, [(b, s, min(size, n_slots - s)) for b, s in enumerate(starts)]


GAIN_TABLE_POINTS = 1 << 16


@lru_cache(maxsize=32)
def _kernel_pattern(pattern: AntennaPattern):
    """Cone as (half beamwidth, peak gain); anything else as a gain table on [0, pi]."""
    if isinstance(pattern, Cone):
        return pattern.phi / 2, pattern.peak_gain, np.zeros(2), 1.0
    grid = np.linspace(0, np.pi, GAIN_TABLE_POINTS + 1)
    return -1.0, 0.0, np.ascontiguousarray(pattern.gain(grid), dtype=float), np.pi / GAIN_TABLE_POINTS


@numba.njit(cache=True, nogil=True)
def _tabulated(table, inv_step, angle):
    x = angle * inv_step
    i = int(x)
    if i >= table.size - 1:
        return table[table.size - 1]
    f = x - i
    return table[i] + f * (table[i + 1] - table[i])


@numba.njit(cache=True, nogil=True)
def _link_gains(counts, rx, u_rel, u_bore, support, half_beam, peak, table, step):
    two_pi = 2.0 * np.pi
    inv_step = 1.0 / step
    out = np.empty(u_rel.size)
    k = 0
    for s in range(counts.size):
        facing = rx[s] + np.pi
        for _ in range(counts[s]):
            rel_rx = support * (2.0 * u_rel[k] - 1.0)
            # Transmitter boresight 2 pi u against its bearing to the origin.
            rel_tx = facing + rel_rx - two_pi * u_bore[k]
            rel_tx -= two_pi * np.floor((rel_tx + np.pi) / two_pi)
            a_tx = abs(rel_tx)
            a_rx = abs(rel_rx)
            if half_beam > 0:
                out[k] = peak * peak if (a_tx <= half_beam and a_rx <= half_beam) else 0.0
            else:
                out[k] = _tabulated(table, inv_step, a_tx) * _tabulated(table, inv_step, a_rx)
            k += 1
    return out


@numba.njit(cache=True, nogil=True)
def _inverse_power(u, half_alpha):
    if half_alpha == 1.0:
        return 1.0 / u
    if half_alpha == 2.0:
        return 1.0 / (u * u)
    if half_alpha == 1.5:
        return 1.0 / (u * np.sqrt(u))
    return u ** (-half_alpha)


@numba.njit(cache=True, nogil=True)
def _reduce_slots(counts, gains, u_dist, fading, scale, half_alpha, inner_u):
    # Power of the j-th contributing radar: scale * gain * (R^2 u_j)^(-alpha/2) * fading_j.
    n = counts.size
    aggregate = np.zeros(n)
    inner = np.zeros(n)
    strongest = np.zeros(n)
    active = np.zeros(n, dtype=np.int64)
    use_fading = fading.size > 0
    k = 0
    j = 0
    for s in range(n):
        for _ in range(counts[s]):
            g = gains[k]
            k += 1
            if g == 0.0:
                continue
            w = scale * g * _inverse_power(u_dist[j], half_alpha)
            if use_fading:
                w *= fading[j]
            if u_dist[j] <= inner_u:
                inner[s] += w
            j += 1
            aggregate[s] += w
            if w > strongest[s]:
                strongest[s] = w
            active[s] += 1
    return aggregate, strongest, active, inner


def _sample_block(p, pattern, radius, per_slot, stream, n, inner_u):
    g = stream.generator()
    k = derived(p)
    counts = g.poisson(per_slot, size=n)
    rx = g.uniform(0, 2 * np.pi, n)
    total = int(counts.sum())
    u_rel = g.random(total)
    u_bore = g.random(total)
    half_beam, peak, table, step = _kernel_pattern(pattern)
    gains = _link_gains(counts, rx, u_rel, u_bore, pattern.support, half_beam, peak, table, step)
    hits = int(np.count_nonzero(gains))
    # Distance (as a uniform fraction of the disk area) and fading are independent of
    # the angles, so they are drawn for contributing radars only.
    u_dist = g.random(hits)
    fading = g.exponential(size=hits) if p.fading is Fading.RAYLEIGH else np.empty(0)
    scale = p.pt * k.ell * radius ** (-p.alpha)
    return _reduce_slots(counts, gains, u_dist, fading, scale, p.alpha / 2, inner_u)


def sample_slot_interference(p: RadarParams, pattern: AntennaPattern, n_slots: int, radius: float,
                             rng, workers: int = 1, inner_radius: float | None = None) -> SlotDraws:
    """Draw ``n_slots`` independent slots of interference at the typical receiver.

    Each slot uses a fresh field restricted to a disk of ``radius``. Work is
    split into blocks keyed by their index under ``rng``; the output is the
    same for any ``workers``. With ``inner_radius`` the result also carries
    the aggregate from the radars of the same draws lying within that radius.
    """
    if n_slots < 0:
        raise DomainError("n_slots must be non-negative")
    if not radius > 0:
        raise DomainError("radius must be positive")
    if inner_radius is not None and not 0 < inner_radius <= radius:
        raise DomainError("inner_radius must lie in (0, radius]")
    stream = as_stream(rng)
    if p.lam == 0 or n_slots == 0:
        z = np.zeros(n_slots)
        inner = None if inner_radius is None else z.copy()
        return SlotDraws(z, z.copy(), np.zeros(n_slots, dtype=int), radius, inner, inner_radius)
    per_slot, plan = _block_plan(p, pattern, radius, n_slots)
    inner_u = 2.0 if inner_radius is None else (inner_radius / radius) ** 2

    def run(item):
        b, _, n = item
        return _sample_block(p, pattern, radius, per_slot, stream.child(b), n, inner_u)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, plan))
    else:
        parts = [run(item) for item in plan]
    agg, strong, active, inner = (np.concatenate(x) for x in zip(*parts))
    return SlotDraws(agg, strong, active, radius, None if inner_radius is None else inner, inner_radius)


def write_scene_csv(scene: Scene, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "x_m", "y_m", "boresight_rad", "mark"])
        for k, ((x, y), b, m) in enumerate(zip(scene.positions, scene.boresights, scene.marks)):
            w.writerow([k, repr(float(x)), repr(float(y)), repr(float(b)), int(m)])
