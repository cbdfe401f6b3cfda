import io
import math

import numpy as np
import pytest

from neuspec import ball as bl
from neuspec.special import first_radial_deriv_zero


@pytest.fixture(scope="module")
def disk():
    return bl.Ball(2, 1.0)


class TestFirstValues:
    def test_mu1_matches_zero_square(self, disk):
        assert bl.mu1_ball(disk) == (first_radial_deriv_zero(2) / 1.0) ** 2
        assert bl.mu1_ball(disk) == pytest.approx(3.389958, abs=1e-6)

    def test_mu1_n3(self):
        b = bl.Ball(3, 1.0)
        assert bl.mu1_ball(b) == pytest.approx(first_radial_deriv_zero(3) ** 2, rel=1e-15)
        # quoted 7-digit reference values carry their own rounding
        assert bl.mu1_ball(b) == pytest.approx(4.332957, rel=5e-7)
        assert bl.upsilon1_ball(b) == pytest.approx(18.77451, rel=2e-6)

    def test_scaling_exact(self, disk):
        assert bl.mu1_ball(bl.Ball(2, 2.0)) == bl.mu1_ball(disk) / 4.0
        assert bl.upsilon1_ball(bl.Ball(2, 2.0)) == bl.upsilon1_ball(disk) / 16.0
        assert bl.upsilon1_poly_ball(bl.Ball(2, 0.5), 1) == 16.0 * bl.upsilon1_ball(disk)

    def test_scaling_covariance(self):
        base = bl.mu1_ball(bl.Ball(2, 1.0))
        for c in (0.3, 0.77, 1.9, 13.0):
            scaled = bl.mu1_ball(bl.Ball(2, c)) * c * c
            assert scaled == pytest.approx(base, rel=1e-14)

    def test_upsilon_is_algebraic_square(self):
        for n in (2, 3, 4):
            for radius in (0.5, 1.0, 2.7):
                b = bl.Ball(n, radius)
                assert bl.upsilon1_ball(b) == bl.mu1_ball(b) ** 2

    def test_poly_power_algebra(self):
        for n in (2, 3):
            b = bl.Ball(n, 1.3)
            mu = bl.mu1_ball(b)
            for m in range(1, 9):
                assert bl.upsilon1_poly_ball(b, m) == mu ** (2 * m)
        b = bl.Ball(2, 1.0)
        assert bl.upsilon1_poly_ball(b, 1) == bl.upsilon1_ball(b)
        assert bl.upsilon1_poly_ball(b, 2) == pytest.approx(132.062, abs=2e-3)

    def test_poly_power_bounds(self, disk):
        with pytest.raises(ValueError):
            bl.upsilon1_poly_ball(disk, 0)
        with pytest.raises(ValueError):
            bl.upsilon1_poly_ball(disk, 9)


class TestSpectrum:
    def test_lowest_disk_level(self, disk):
        entries = bl.neumann_spectrum_ball(disk, 1, power=1)
        assert entries[0].value == pytest.approx(3.389958, abs=1e-6)
        assert entries[0].multiplicity == 2
        assert entries[0].degree == 1

    def test_sorted(self, disk):
        entries = bl.neumann_spectrum_ball(disk, 12, power=1)
        values = [e.value for e in entries]
        assert values == sorted(values)

    def test_power_is_entrywise(self, disk):
        base = bl.neumann_spectrum_ball(disk, 6, power=1)
        for power in (2, 4):
            powered = bl.neumann_spectrum_ball(disk, 6, power=power)
            for a, c in zip(base, powered):
                assert (a.degree, a.radial_index) == (c.degree, c.radial_index)
                assert c.value == a.value**power

    def test_biharmonic_square_of_laplacian(self, disk):
        lap = bl.neumann_spectrum_ball(disk, 1, power=1)[0]
        bih = bl.neumann_spectrum_ball(disk, 1, power=2)[0]
        assert bih.value == lap.value**2

    def test_multiplicities_n3(self):
        b = bl.Ball(3, 1.0)
        entries = bl.neumann_spectrum_ball(b, 3, power=1)
        assert entries[0].multiplicity == 3  # coordinate modes
        assert bl.angular_multiplicity(3, 2) == 5
        assert bl.angular_multiplicity(4, 1) == 4
        assert bl.angular_multiplicity(2, 5) == 2

    def test_csv_export(self, disk):
        entries = bl.neumann_spectrum_ball(disk, 2, power=2)
        text = bl.spectrum_to_csv(disk, entries, 2)
        lines = text.strip().splitlines()
        assert lines[0] == "power,n,R,j,l,multiplicity,value"
        first = lines[1].split(",")
        assert first[0] == "2" and first[1] == "2"
        assert float(first[6]) == entries[0].value  # 17 digits round-trip

    def test_stream_export(self, disk):
        buf = io.StringIO()
        bl.spectrum_to_csv(disk, bl.neumann_spectrum_ball(disk, 1), 1, stream=buf)
        assert buf.getvalue().startswith("power,")


class TestEigenfunction:
    def test_zero_at_origin(self, disk):
        assert bl.ball_eigenfunction(disk, 1, [0.0, 0.0]) == 0.0

    def test_normal_derivative_at_boundary(self, disk):
        # radial finite difference across |x| = R along x-axis
        h = 1e-6
        up = bl.ball_eigenfunction(disk, 1, [1.0 + h, 0.0])
        dn = bl.ball_eigenfunction(disk, 1, [1.0 - h, 0.0])
        assert abs((up - dn) / (2 * h)) < 1e-8

    def test_odd_symmetry_integral(self, disk):
        from neuspec.geometry import Disk
        from neuspec.quadrature import integrate

        val = integrate(
            Disk((0, 0), 1.0),
            lambda p: bl.ball_eigenfunction(disk, 1, p),
            degree=7,
            h=0.05,
        )
        assert abs(val) < 1e-10

    def test_component_bounds(self, disk):
        with pytest.raises(ValueError):
            bl.ball_eigenfunction(disk, 3, [0.1, 0.1])


class TestProjection:
    def test_self_projection(self, disk):
        for l_target in (1, 2):
            mode = bl.radial_mode_fn(disk, 1, l_target)
            coeffs = bl.bessel_fourier_project(mode, disk, 1, 4).coeffs
            for l, c in enumerate(coeffs, start=1):
                expect = 1.0 if l == l_target else 0.0
                assert c == pytest.approx(expect, abs=1e-8)

    def test_smooth_reconstruction(self, disk):
        psi = lambda r: r * (1 - r**2) ** 2  # noqa: E731 - test-local field
        coeffs = bl.bessel_fourier_project(psi, disk, 1, 12)
        # weighted L2 reconstruction error with a fine independent grid
        r = np.linspace(1e-9, 1.0, 4001)
        diff = bl.bessel_fourier_reconstruct(coeffs, r) - psi(r)
        err = math.sqrt(np.trapezoid(diff * diff * r, r))
        assert err < 1e-4

    def test_parseval_for_mixtures(self, disk):
        from neuspec.ball import _radial_quadrature

        table_modes = [bl.radial_mode_fn(disk, 1, l) for l in (1, 2, 3)]
        c = (0.7, -0.4, 0.2)
        r, w = _radial_quadrature(1.0)
        weight = w * r  # n = 2
        u = sum(ci * m(r) for ci, m in zip(c, table_modes))
        total = float(np.sum(u * u * weight))
        by_modes = sum(
            ci**2 * float(np.sum(m(r) ** 2 * weight)) for ci, m in zip(c, table_modes)
        )
        assert total == pytest.approx(by_modes, rel=1e-8)

    def test_rejects_bad_samples(self, disk):
        with pytest.raises(ValueError):
            bl.bessel_fourier_project(lambda r: r * np.nan, disk, 1, 3)


class TestValidation:
    def test_ball_invariants(self):
        with pytest.raises(ValueError):
            bl.Ball(1, 1.0)
        with pytest.raises(ValueError):
            bl.Ball(2, 0.0)
