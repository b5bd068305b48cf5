"""
Tests for the centred Bessel-mode decomposition of the wave field.
"""

import math

import numpy as np
import pytest
from scipy import special

from src.common.exceptions import DomainError
from src.domain.models import ModeSpectrum, WaveSources
from src.services.dynamics import wave_height
from src.services.specfun import bessel_j0_zero
from src.services.spectrum import (
    circular_orbit_amplitude,
    dominant_mode,
    effective_potential,
    graf_spectrum,
    mode_power,
    radial_profile,
    reconstruct_field,
    wave_field_grid,
)

TWO_PI = 2.0 * math.pi


def rotate(sources: WaveSources, angle: float) -> WaveSources:
    c, s = math.cos(angle), math.sin(angle)
    x, y = sources.positions[:, 0], sources.positions[:, 1]
    return WaveSources(np.column_stack([c * x - s * y, s * x + c * y]), sources.birth_times)


@pytest.fixture
def random_sources():
    """200 sources inside radius 2, one per bounce."""
    rng = np.random.default_rng(2013)
    radius = 2.0 * np.sqrt(rng.uniform(size=200))
    angle = rng.uniform(0.0, TWO_PI, size=200)
    positions = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    return WaveSources(positions, np.arange(200, dtype=float))


class TestGrafSpectrum:
    """Coefficients of single and many sources."""

    def test_source_on_axis(self):
        """A source at the origin only feeds A0, with its temporal weight."""
        spectrum = graf_spectrum(WaveSources([[0.0, 0.0]], [10.0]), 15.0, 20.0, n_max=6)
        assert spectrum.a[0] == pytest.approx(math.exp(-0.25))
        assert all(v == 0.0 for v in spectrum.a[1:])
        assert all(v == 0.0 for v in spectrum.b)

    def test_source_on_x_axis(self):
        """A source at (rho, 0) has A_n = eps_n J_n(2 pi rho) and no sine part."""
        rho = 0.37
        spectrum = graf_spectrum(WaveSources([[rho, 0.0]], [0.0]), 0.0, 10.0, n_max=10)
        expected = special.jv(np.arange(11), TWO_PI * rho) * np.array([1.0] + [2.0] * 10)
        np.testing.assert_allclose(spectrum.a, expected, atol=1e-12)
        np.testing.assert_allclose(spectrum.b, 0.0, atol=1e-15)

    def test_empty_sources(self):
        """No sources, zero spectrum of the requested size."""
        spectrum = graf_spectrum([], 0.0, 10.0, n_max=5)
        assert spectrum.a == (0.0,) * 6
        assert spectrum.b == (0.0,) * 5

    @pytest.mark.parametrize("n_max", [-1, 65])
    def test_order_bounds(self, n_max):
        with pytest.raises(DomainError):
            graf_spectrum([], 0.0, 10.0, n_max=n_max)

    def test_future_source_raises(self):
        with pytest.raises(DomainError):
            graf_spectrum(WaveSources([[0.1, 0.0]], [5.0]), 4.0, 10.0)

    def test_reconstruction_matches_direct_sum(self, random_sources):
        """The truncated expansion reproduces the direct J0 sum inside r < 3."""
        rng = np.random.default_rng(5)
        spectrum = graf_spectrum(random_sources, 200.0, 50.0, n_max=40)
        for _ in range(50):
            r = 3.0 * math.sqrt(rng.uniform())
            theta = rng.uniform(0.0, TWO_PI)
            point = (r * math.cos(theta), r * math.sin(theta))
            direct = wave_height(point, random_sources, 200.0, 50.0)
            assert reconstruct_field(spectrum, point) == pytest.approx(direct, abs=1e-8)

    def test_reconstruction_at_axis_is_a0(self, random_sources):
        spectrum = graf_spectrum(random_sources, 200.0, 50.0, n_max=20)
        assert reconstruct_field(spectrum, (0.0, 0.0)) == pytest.approx(spectrum.a[0])

    def test_rotation_covariance(self, random_sources):
        """Rotating every source by alpha rotates (A_n, B_n) by n alpha."""
        alpha = 0.7
        base = graf_spectrum(random_sources, 200.0, 50.0, n_max=10)
        turned = graf_spectrum(rotate(random_sources, alpha), 200.0, 50.0, n_max=10)
        assert turned.a[0] == pytest.approx(base.a[0], abs=1e-10)
        for n in range(1, 11):
            a, b = base.a[n], base.b[n - 1]
            c, s = math.cos(n * alpha), math.sin(n * alpha)
            assert turned.a[n] == pytest.approx(a * c - b * s, abs=1e-10)
            assert turned.b[n - 1] == pytest.approx(b * c + a * s, abs=1e-10)

    def test_threefold_symmetry(self, random_sources):
        """Sources invariant under 2 pi / 3 rotations only excite n = 0 mod 3."""
        base = random_sources[0:20]
        symmetric = base.concat(rotate(base, TWO_PI / 3)).concat(rotate(base, 2 * TWO_PI / 3))
        spectrum = graf_spectrum(symmetric, 20.0, 10.0, n_max=12)
        for n in range(1, 13):
            if n % 3:
                assert spectrum.a[n] == pytest.approx(0.0, abs=1e-10)
                assert spectrum.b[n - 1] == pytest.approx(0.0, abs=1e-10)
        assert abs(spectrum.a[3]) + abs(spectrum.b[2]) > 1e-6

    def test_figure_eight_has_only_even_cosine_modes(self):
        """A figure-eight path symmetric in x and y excites no odd and no sine modes."""
        a0 = 0.8
        theta = np.linspace(-math.pi / 4 + 0.01, math.pi / 4 - 0.01, 40)
        r = a0 * np.sqrt(2.0 * np.cos(2.0 * theta))
        x, y = r * np.cos(theta), r * np.sin(theta)
        positions = np.concatenate([
            np.column_stack([x, y]),
            np.column_stack([-x, -y]),
            np.column_stack([x, -y]),
            np.column_stack([-x, y]),
        ])
        births = np.tile(np.arange(40, dtype=float), 4)
        spectrum = graf_spectrum(WaveSources(positions, births), 40.0, 20.0, n_max=12)
        for n in range(1, 13, 2):
            assert spectrum.a[n] == pytest.approx(0.0, abs=1e-10)
        np.testing.assert_allclose(spectrum.b, 0.0, atol=1e-10)

    def test_lemniscate_is_dominated_by_fourth_order(self):
        """A Bernoulli lemniscate of half-width 0.95 sqrt(2) puts most of its power in J4."""
        c = 0.95 * math.sqrt(2.0)
        t = TWO_PI * np.arange(720) / 720
        scale = c / (1.0 + np.sin(t) ** 2)
        positions = np.column_stack([scale * np.cos(t), scale * np.sin(t) * np.cos(t)])
        spectrum = graf_spectrum(WaveSources(positions, np.zeros(720)), 1.0, 20.0, n_max=12)
        assert dominant_mode(spectrum, range(2, 9)) == 4
        for n in range(1, 13, 2):
            assert spectrum.a[n] == pytest.approx(0.0, abs=1e-10)
        np.testing.assert_allclose(spectrum.b, 0.0, atol=1e-10)


class TestModePower:
    """Power and dominant order."""

    @pytest.fixture
    def spectrum(self):
        return ModeSpectrum(a=(0.0, 0.0, 3.0, 0.0, 1.0), b=(0.0, 0.0, 2.0, 0.0), n_max=4)

    def test_power(self, spectrum):
        raw, normalized = mode_power(spectrum)
        np.testing.assert_allclose(raw, [0.0, 0.0, 9.0, 4.0, 1.0])
        assert normalized.sum() == pytest.approx(1.0)
        assert normalized[2] == pytest.approx(9.0 / 14.0)

    def test_zero_field_power(self):
        _, normalized = mode_power(ModeSpectrum(a=(0.0, 0.0), b=(0.0,), n_max=1))
        assert not normalized.any()

    def test_dominant_mode(self, spectrum):
        assert dominant_mode(spectrum) == 2
        assert dominant_mode(spectrum, range(3, 5)) == 3

    def test_dominant_mode_outside_spectrum(self, spectrum):
        with pytest.raises(DomainError):
            dominant_mode(spectrum, range(10, 12))


class TestCircularOrbit:
    """Mean wave and effective potential of a circular orbit."""

    def test_amplitude_at_origin(self):
        """R = 0: A0 = 1 / (exp(1/M) - 1)."""
        assert circular_orbit_amplitude(0.0, 10.0) == pytest.approx(1.0 / math.expm1(0.1))

    def test_amplitude_vanishes_at_j0_zero(self):
        radius = bessel_j0_zero(1) / TWO_PI
        assert abs(circular_orbit_amplitude(radius, 50.0)) < 1e-12

    def test_high_memory_limit(self):
        """For large M the amplitude approaches M J0(2 pi R)."""
        memory = 1000.0
        radius = 0.3
        assert circular_orbit_amplitude(radius, memory) == pytest.approx(memory * special.j0(TWO_PI * radius), abs=1.0)

    def test_potential_extremum_at_zero(self):
        """Force vanishes at the first J0 zero, outward inside and inward outside."""
        radius = bessel_j0_zero(1) / TWO_PI
        potential, force = effective_potential(radius)
        assert potential < 1e-24
        assert abs(force) < 1e-10
        assert effective_potential(radius - 0.01)[1] > 0
        assert effective_potential(radius + 0.01)[1] < 0

    @pytest.mark.parametrize("radius", [0.1, 0.3, 0.55, 0.9, 1.4])
    def test_force_is_minus_gradient(self, radius):
        h = 1e-6
        slope = (effective_potential(radius + h)[0] - effective_potential(radius - h)[0]) / (2 * h)
        assert effective_potential(radius)[1] == pytest.approx(-slope, abs=1e-8)

    def test_negative_radius_raises(self):
        with pytest.raises(DomainError):
            effective_potential(-0.1)

    def test_radial_profile(self):
        """h_r(0) equals A0; the profile follows J0(2 pi r)."""
        profile = radial_profile(0.4, 20.0, np.array([0.0, 0.25, 1.0]))
        amplitude = circular_orbit_amplitude(0.4, 20.0)
        assert profile[0] == pytest.approx(amplitude)
        assert profile[1] == pytest.approx(amplitude * special.j0(TWO_PI * 0.25))


class TestFieldGrid:
    """Field maps."""

    def test_grid(self, random_sources):
        axis, heights = wave_field_grid(random_sources[:30], 30.0, 10.0, extent=2.0, resolution=5)
        assert heights.shape == (5, 5)
        assert axis[2] == 0.0
        assert heights[2, 2] == pytest.approx(wave_height((0.0, 0.0), random_sources[:30], 30.0, 10.0))
        assert heights[2, 4] == pytest.approx(wave_height((2.0, 0.0), random_sources[:30], 30.0, 10.0))

    def test_resolution_bound(self):
        with pytest.raises(DomainError):
            wave_field_grid([], 0.0, 10.0, resolution=1)
