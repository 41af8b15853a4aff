"""Tests for the Jacobi and Weierstrass layer."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from core.elliptic import (
    complete_elliptic_integrals,
    half_period,
    inverse_wp,
    jacobi_complex,
    jacobi_sn_cn_dn,
    lattice_from_modulus,
    log_sigma,
    modulus_params,
    reduce_to_cell,
    sigma_ratio,
    weier_sigma,
    weier_zeta,
    wp,
    wp_prime,
)
from core.errors import DomainError, PoleProximityError

MODULI = [0.3, 0.5, 0.95, 0.99]


def _cell_points(lat, count=50, seed=7):
    rng = np.random.default_rng(seed)
    z = rng.uniform(-lat.omega, lat.omega, count) \
        + 1j * rng.uniform(-lat.omegap.imag, lat.omegap.imag, count)
    return np.where(np.abs(z) < 0.5, z + 1.0, z)


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


# ── Moduli ──────────────────────────────────────────────────────────


class TestModulus:
    def test_complete_integrals_known_value(self):
        big_k, big_kc = complete_elliptic_integrals(0.5)
        assert big_k == pytest.approx(1.8540746773013719, rel=1e-14)
        assert big_kc == pytest.approx(big_k, rel=1e-14)

    def test_complementary_integral_near_one(self):
        _, big_kc = complete_elliptic_integrals(1.0 - 1e-12)
        assert big_kc == pytest.approx(math.pi / 2, rel=1e-6)

    @pytest.mark.parametrize("k2", [0.0, 1.0, -0.2, 1.5, float("nan")])
    def test_rejects_modulus_outside_unit_interval(self, k2):
        with pytest.raises(DomainError):
            modulus_params(k2)

    def test_modulus_params_fields(self):
        params = modulus_params(0.36)
        assert params.k == pytest.approx(0.6)
        assert params.kc == pytest.approx(0.8)
        assert params.big_k == pytest.approx(float(special.ellipk(0.36)))


# ── Jacobi functions ────────────────────────────────────────────────


class TestJacobi:
    @pytest.mark.parametrize("k2", MODULI)
    def test_real_identities(self, k2):
        x = np.random.default_rng(1).uniform(-20.0, 20.0, 200)
        sn, cn, dn = jacobi_sn_cn_dn(x, k2)
        assert np.max(np.abs(sn * sn + cn * cn - 1.0)) < 1e-12
        assert np.max(np.abs(dn * dn + k2 * sn * sn - 1.0)) < 1e-12

    def test_quarter_period_values(self):
        big_k, _ = complete_elliptic_integrals(0.8)
        sn, cn, dn = jacobi_sn_cn_dn(big_k, 0.8)
        assert sn == pytest.approx(1.0, abs=1e-14)
        assert cn == pytest.approx(0.0, abs=1e-12)
        assert dn == pytest.approx(math.sqrt(0.2), abs=1e-12)

    def test_complex_matches_real_axis(self):
        x = np.linspace(-5.0, 5.0, 41)
        real = jacobi_sn_cn_dn(x, 0.7)
        cplx = jacobi_complex(x + 0j, 0.7)
        for r, c in zip(real, cplx):
            assert np.max(np.abs(r - c)) < 1e-13

    @pytest.mark.parametrize("k2", MODULI)
    def test_complex_identities(self, k2):
        big_k, big_kc = complete_elliptic_integrals(k2)
        rng = np.random.default_rng(3)
        z = rng.uniform(-big_k, big_k, 100) + 1j * rng.uniform(-0.5, 0.5, 100) * big_kc
        sn, cn, dn = jacobi_complex(z, k2)
        assert np.max(np.abs(sn * sn + cn * cn - 1.0)) < 1e-11
        assert np.max(np.abs(dn * dn + k2 * sn * sn - 1.0)) < 1e-11

    def test_pole_guard(self):
        _, big_kc = complete_elliptic_integrals(0.5)
        with pytest.raises(PoleProximityError) as info:
            jacobi_complex(1j * big_kc, 0.5)
        assert info.value.distance < 1e-8


# ── Lattice ─────────────────────────────────────────────────────────


class TestLattice:
    @pytest.mark.parametrize("k2", MODULI)
    def test_branch_values(self, k2):
        lat = lattice_from_modulus(k2)
        assert lat.e1 + lat.e2 + lat.e3 == pytest.approx(0.0, abs=1e-15)
        assert lat.e1 - lat.e3 == pytest.approx(1.0)
        assert lat.e1 > lat.e2 > lat.e3
        assert lat.g2 == pytest.approx(2.0 * (lat.e1 ** 2 + lat.e2 ** 2 + lat.e3 ** 2))
        assert lat.g3 == pytest.approx(4.0 * lat.e1 * lat.e2 * lat.e3)

    @pytest.mark.parametrize("k2", MODULI)
    def test_eta_matches_complete_integrals(self, k2):
        lat = lattice_from_modulus(k2)
        expected = float(special.ellipe(k2)) - lat.e1 * lat.omega
        assert lat.eta == pytest.approx(expected, rel=1e-12, abs=1e-13)

    @pytest.mark.parametrize("k2", MODULI)
    def test_legendre_relation(self, k2):
        lat = lattice_from_modulus(k2)
        zeta_omegap = complex(weier_zeta(lat.omegap, lat))
        assert abs(zeta_omegap - lat.etap) < 1e-11
        assert abs(lat.eta * lat.omegap - lat.etap * lat.omega - 0.5j * math.pi) < 1e-12

    def test_half_periods(self):
        lat = lattice_from_modulus(0.5)
        assert half_period(1, lat) == lat.omega
        assert half_period(3, lat) == lat.omegap
        assert half_period(2, lat) == lat.omega + lat.omegap
        with pytest.raises(DomainError):
            half_period(4, lat)

    def test_reduce_to_cell(self):
        lat = lattice_from_modulus(0.5)
        z0 = 0.3 + 0.2j
        zr, m, n = reduce_to_cell(z0 + 6.0 * lat.omega - 4.0 * lat.omegap, lat)
        assert abs(zr - z0) < 1e-12
        assert (m, n) == (3, -2)

    def test_reduce_to_fundamental_cell(self):
        lat = lattice_from_modulus(0.5)
        zr, _, _ = reduce_to_cell(-0.4 - 0.3j, lat, centered=False)
        assert 0.0 <= zr.real < 2.0 * lat.omega
        assert 0.0 <= zr.imag < 2.0 * lat.omegap.imag


# ── Weierstrass functions ───────────────────────────────────────────


class TestWeierstrass:
    @pytest.mark.parametrize("k2", MODULI)
    def test_differential_equation(self, k2):
        lat = lattice_from_modulus(k2)
        z = _cell_points(lat)
        w, wd = np.asarray(wp(z, lat)), np.asarray(wp_prime(z, lat))
        assert _rel(wd * wd, 4.0 * w ** 3 - lat.g2 * w - lat.g3) < 1e-10

    @pytest.mark.parametrize("k2", MODULI)
    def test_routes_agree(self, k2):
        lat = lattice_from_modulus(k2)
        z = _cell_points(lat)
        assert _rel(wp(z, lat, route="theta"), wp(z, lat)) < 1e-10

    def test_unknown_route(self):
        lat = lattice_from_modulus(0.5)
        with pytest.raises(DomainError):
            wp(0.3 + 0.1j, lat, route="series")

    def test_half_period_values(self):
        lat = lattice_from_modulus(0.7)
        assert abs(wp(lat.omega1, lat) - lat.e1) < 1e-12
        assert abs(wp(lat.omega2, lat) - lat.e2) < 1e-12
        assert abs(wp(lat.omega3, lat) - lat.e3) < 1e-12

    def test_laurent_behaviour_at_origin(self):
        lat = lattice_from_modulus(0.5)
        z = 1e-3
        assert abs(wp(z, lat) * z * z - 1.0) < 1e-6
        assert abs(weier_zeta(z, lat) * z - 1.0) < 1e-6
        assert abs(weier_sigma(z, lat) / z - 1.0) < 1e-6

    def test_parity(self):
        lat = lattice_from_modulus(0.95)
        z = _cell_points(lat)
        assert _rel(wp(-z, lat), wp(z, lat)) < 1e-12
        assert _rel(-np.asarray(weier_zeta(-z, lat)), weier_zeta(z, lat)) < 1e-12
        assert _rel(-np.asarray(weier_sigma(-z, lat)), weier_sigma(z, lat)) < 1e-12

    @pytest.mark.parametrize("k2", MODULI)
    def test_zeta_quasi_periodicity(self, k2):
        lat = lattice_from_modulus(k2)
        z = _cell_points(lat)
        base = np.asarray(weier_zeta(z, lat, reduce=False))
        for step, eta in ((lat.omega, lat.eta), (lat.omegap, lat.etap)):
            moved = np.asarray(weier_zeta(z + 2.0 * step, lat, reduce=False))
            assert _rel(moved, base + 2.0 * eta) < 1e-10

    @pytest.mark.parametrize("k2", MODULI)
    def test_sigma_quasi_periodicity(self, k2):
        lat = lattice_from_modulus(k2)
        z = _cell_points(lat)
        for step, eta in ((lat.omega, lat.eta), (lat.omegap, lat.etap)):
            lhs = np.asarray(log_sigma(z + 2.0 * step, lat, reduce=False))
            rhs = np.asarray(log_sigma(z, lat, reduce=False)) + 1j * math.pi \
                + 2.0 * eta * (z + step)
            assert np.max(np.abs(np.exp(lhs - rhs) - 1.0)) < 1e-10

    def test_reduced_zeta_matches_direct(self):
        lat = lattice_from_modulus(0.5)
        z = 0.4 + 0.3j
        shifted = z + 4.0 * lat.omega + 2.0 * lat.omegap
        expected = complex(weier_zeta(z, lat)) + 4.0 * lat.eta + 2.0 * lat.etap
        assert abs(weier_zeta(shifted, lat) - expected) < 1e-10

    @staticmethod
    def _ratio_stencil(z, lat, h=1e-3):
        ratio = {j: np.asarray(sigma_ratio(z, j * h, lat)) for j in (-2, -1, 1, 2)}
        return (-ratio[2] + 8 * ratio[1] - 8 * ratio[-1] + ratio[-2]) / (12 * h)

    def test_sigma_derivative_is_zeta(self):
        lat = lattice_from_modulus(0.8)
        z = _cell_points(lat, count=20)
        assert _rel(self._ratio_stencil(z, lat), weier_zeta(z, lat)) < 1e-9

    @pytest.mark.parametrize("k2", [0.5, 0.99])
    def test_sigma_derivative_across_cell_boundary(self, k2):
        lat = lattice_from_modulus(k2)
        h = 1e-3
        t = np.linspace(-0.8, 0.8, 9)
        z = np.concatenate([
            lat.omega + 0.5 * h + 1j * t * lat.omegap.imag,
            -lat.omega - 0.5 * h + 1j * t * lat.omegap.imag,
        ])
        _, m_lo, n_lo = reduce_to_cell(z - h, lat)
        _, m_hi, n_hi = reduce_to_cell(z + h, lat)
        assert np.all((m_lo != m_hi) | (n_lo != n_hi))
        assert _rel(self._ratio_stencil(z, lat, h), weier_zeta(z, lat)) < 1e-9

    def test_pole_guard(self):
        lat = lattice_from_modulus(0.5)
        with pytest.raises(PoleProximityError):
            wp(0.0, lat)
        with pytest.raises(PoleProximityError):
            weier_zeta(2.0 * lat.omega, lat)


# ── Inversion ───────────────────────────────────────────────────────


class TestInverseWp:
    @pytest.mark.parametrize("k2", [0.5, 0.95, 0.99])
    def test_roundtrip_on_every_branch(self, k2):
        lat = lattice_from_modulus(k2)
        targets = [
            lat.e1 + 0.7,
            0.5 * (lat.e1 + lat.e2),
            0.5 * (lat.e2 + lat.e3),
            lat.e3 - 0.8,
            0.4 + 0.3j,
            -1.2 - 0.5j,
        ]
        for c in targets:
            t = inverse_wp(c, lat)
            assert abs(wp(t, lat) - c) < 1e-10 * max(1.0, abs(c))
            assert -1e-12 <= t.real <= 2.0 * lat.omega + 1e-12
            assert -1e-12 <= t.imag <= 2.0 * lat.omegap.imag + 1e-12

    def test_branch_points_map_to_half_periods(self):
        lat = lattice_from_modulus(0.6)
        assert abs(inverse_wp(lat.e1, lat) - lat.omega1) < 1e-9
        assert abs(inverse_wp(lat.e2, lat) - lat.omega2) < 1e-9
        assert abs(inverse_wp(lat.e3, lat) - lat.omega3) < 1e-9

    def test_rejects_non_finite(self):
        lat = lattice_from_modulus(0.6)
        with pytest.raises(DomainError):
            inverse_wp(float("nan"), lat)
