import math

import numpy as np
import pytest
from scipy import integrate

from radarint.antenna import (
    Cone,
    PlanarArray,
    aligned_link_gain,
    pattern_metadata,
    wrap_angle,
    write_pattern_csv,
)
from radarint.errors import DomainError


def test_wrap_angle_range():
    x = np.linspace(-20, 20, 1001)
    w = wrap_angle(x)
    assert np.all(w > -np.pi) and np.all(w <= np.pi)
    np.testing.assert_allclose(np.cos(w), np.cos(x), atol=1e-12)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)


class TestCone:
    def test_values(self):
        c = Cone(math.pi / 6)
        assert c.gain(0.0) == pytest.approx(144 / math.pi)
        assert c.gain(math.pi / 4) == 0.0
        assert c.gain(math.pi / 12) == pytest.approx(144 / math.pi)

    def test_integral(self):
        c = Cone(math.pi / 6)
        val, _ = integrate.quad(c.gain, -np.pi, np.pi, points=[-c.phi / 2, c.phi / 2], epsabs=1e-13)
        assert val == pytest.approx(4 * math.pi / c.phi, rel=1e-9)

    def test_invalid(self):
        with pytest.raises(DomainError):
            Cone(0.0)


class TestPlanarArray:
    arr = PlanarArray()

    def test_beamwidth(self):
        hpbw = math.degrees(self.arr.half_power_beamwidth)
        assert 24 <= hpbw <= 27

    def test_peak_normalisation(self):
        assert self.arr.gain(0.0) == pytest.approx(4 * math.pi / self.arr.half_power_beamwidth**2)
        edge = self.arr.half_power_beamwidth / 2
        assert self.arr.gain(edge) == pytest.approx(self.arr.peak_gain / 2, rel=1e-9)

    def test_factor_bounded(self):
        theta = np.linspace(-np.pi, np.pi, 20001)
        assert np.all(np.abs(self.arr.array_factor(theta)) <= 1 + 1e-12)
        assert np.argmax(self.arr.power_pattern(theta)) == 10000

    def test_sidelobes(self):
        assert -14 <= self.arr.sidelobe_level_db <= -9
        assert self.arr.sidelobe_level_db == pytest.approx(-11.30, abs=0.02)

    def test_back_half_suppressed(self):
        assert self.arr.gain(math.pi) == 0.0
        mirrored = PlanarArray(back_baffled=False)
        assert mirrored.gain(math.pi) == pytest.approx(mirrored.peak_gain)

    def test_metadata_reports_measured_level(self):
        meta = pattern_metadata(self.arr)
        assert meta["nominal_sidelobe_db"] == -10.0
        assert meta["measured_sidelobe_db"] == pytest.approx(self.arr.sidelobe_level_db)


@pytest.mark.parametrize("pattern", [Cone(math.pi / 6), PlanarArray()])
def test_symmetric_gain(pattern):
    theta = np.linspace(0, np.pi, 777)
    np.testing.assert_allclose(pattern.gain(theta), pattern.gain(-theta), rtol=1e-13, atol=0)


class TestAlignedLink:
    cone = Cone(math.pi / 6)

    def test_facing(self):
        g = aligned_link_gain(0.0, math.pi, [0.0, 0.0], [10.0, 0.0], self.cone)
        assert g == pytest.approx((144 / math.pi) ** 2)
        assert g == pytest.approx(2101, rel=1e-3)

    def test_outside_cone(self):
        assert aligned_link_gain(math.pi / 2, math.pi, [0.0, 0.0], [10.0, 0.0], self.cone) == 0.0

    def test_coincident(self):
        with pytest.raises(DomainError):
            aligned_link_gain(0.0, 0.0, [1.0, 1.0], [1.0, 1.0], self.cone)

    @pytest.mark.parametrize("pattern", [Cone(math.pi / 6), PlanarArray()])
    def test_swap_symmetry(self, pattern):
        g = np.random.default_rng(1)
        a, b = g.uniform(0, 2 * np.pi, (2, 500))
        pa, pb = g.normal(size=(2, 500, 2))
        np.testing.assert_allclose(aligned_link_gain(a, b, pa, pb, pattern),
                                   aligned_link_gain(b, a, pb, pa, pattern), rtol=1e-12)

    def test_alignment_probability(self):
        # Bernoulli oracle: both cones must contain the link direction.
        n = 1_000_000
        g = np.random.default_rng(2024)
        tx, rx = g.uniform(0, 2 * np.pi, (2, n))
        ang = g.uniform(0, 2 * np.pi, n)
        pos = np.column_stack((np.cos(ang), np.sin(ang)))
        hits = np.count_nonzero(aligned_link_gain(tx, rx, pos, np.zeros(2), self.cone))
        expected = 1 / 144
        sigma = math.sqrt(expected * (1 - expected) / n)
        assert abs(hits / n - expected) < 3 * sigma


def test_pattern_csv(tmp_path):
    path = tmp_path / "p.csv"
    write_pattern_csv(PlanarArray(), path, points=361)
    rows = path.read_text().splitlines()
    assert rows[0] == "theta_rad,theta_deg,gain_linear"
    assert len(rows) == 362
