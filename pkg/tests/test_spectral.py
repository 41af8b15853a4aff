"""Tests for the monodromy integrator, band structure and residual helpers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from core.errors import DomainError
from core.lame import band_edges, energy_window, ground_energy, make_model, potential
from core.models import SpectralClass
from core.spectral import (
    assert_period,
    band_structure,
    classify,
    floquet_exponent,
    hill_discriminant,
    integrate_monodromy,
    isospectral_compare,
    locate_edge,
    monodromy_batch,
    richardson_second_derivative,
    schrodinger_residual,
)
from core.bloch import bloch_solution
from core.susy import partner_bloch_closed_form


def _sampler(model):
    return lambda x: potential(x, model)


def _free(_x):
    return 0.0


# ── Monodromy ───────────────────────────────────────────────────────


class TestMonodromy:
    def test_free_particle_discriminant(self):
        length = 2.0 * math.pi
        energies = np.linspace(0.1, 10.0, 25)
        found = hill_discriminant(_free, length, energies)
        assert np.max(np.abs(found - 2.0 * np.cos(np.sqrt(energies) * length))) < 1e-9

    def test_scalar_in_scalar_out(self):
        value = hill_discriminant(_free, 1.0, 4.0)
        assert isinstance(value, float)
        assert value == pytest.approx(2.0 * math.cos(2.0), abs=1e-10)

    def test_determinant_is_one(self):
        model = make_model(1, 1, 0.99)
        lo, hi = energy_window(model)
        for result in monodromy_batch(_sampler(model), model.period, np.linspace(lo, hi, 20)):
            assert abs(result.determinant - 1.0) / max(1.0, abs(result.m11 * result.m22)) < 1e-9

    def test_translation_invariance(self):
        model = make_model(2, 1, 0.95)
        energies = np.linspace(3.0, 12.0, 15)
        base = hill_discriminant(_sampler(model), model.period, energies)
        moved = hill_discriminant(_sampler(model), model.period, energies,
                                  x0=0.37 * model.modulus.big_k)
        assert np.max(np.abs(moved - base) / np.maximum(1.0, np.abs(base))) < 1e-9

    def test_classification(self):
        assert classify(3.0) is SpectralClass.GAP
        assert classify(-2.5) is SpectralClass.GAP
        assert classify(0.4) is SpectralClass.BAND
        assert classify(2.0) is SpectralClass.EDGE

    def test_single_energy_result(self):
        model = make_model(1, 1, 0.99)
        result = integrate_monodromy(_sampler(model), model.period, 3.0)
        assert result.energy == 3.0
        assert result.classification is SpectralClass.BAND

    def test_floquet_exponent(self):
        assert floquet_exponent(1.5, 2.0) == 0.0
        assert floquet_exponent(2.0 * math.cosh(3.0), 2.0) == pytest.approx(1.5)
        assert floquet_exponent(-2.0 * math.cosh(3.0), 2.0) == pytest.approx(1.5)

    def test_assert_period(self):
        model = make_model(1, 1, 0.5)
        assert_period(_sampler(model), model.period)
        with pytest.raises(DomainError):
            assert_period(lambda x: x, 1.0)


# ── Band structure ──────────────────────────────────────────────────


class TestBandStructure:
    def test_one_one_edges(self):
        model = make_model(1, 1, 0.99)
        lo, hi = energy_window(model)
        structure = band_structure(_sampler(model), model.period, np.linspace(lo, hi, 400))
        assert structure.edges == pytest.approx(band_edges(model), abs=1e-6)
        assert structure.finite_band_count == 1
        assert len(structure.gaps) == 1

    def test_two_one_edges(self):
        model = make_model(2, 1, 0.95)
        lo, hi = energy_window(model)
        structure = band_structure(_sampler(model), model.period, np.linspace(lo, hi, 600))
        assert structure.edges == pytest.approx(band_edges(model), abs=1e-5)
        assert structure.finite_band_count == 2
        assert len(structure.gaps) == 2

    def test_locate_edge(self):
        model = make_model(1, 1, 0.99)
        edge = locate_edge(_sampler(model), model.period, 2.5, 3.0)
        assert edge == pytest.approx(2.79, abs=1e-8)

    def test_isospectral_distance_is_absolute(self):
        period = 2.0
        grid = np.linspace(-3.0, -1.0, 9)
        deviation = isospectral_compare(_free, lambda _x: 0.5, period, grid)
        expected = np.max(np.abs(
            2.0 * np.cosh(np.sqrt(-grid) * period) - 2.0 * np.cosh(np.sqrt(0.5 - grid) * period)
        ))
        assert expected > 10.0
        assert deviation == pytest.approx(expected, rel=1e-7)

    def test_isospectral_self(self):
        model = make_model(1, 1, 0.5)
        grid = np.linspace(0.0, 5.0, 20)
        assert isospectral_compare(_sampler(model), _sampler(model), model.period, grid) == 0.0

    @pytest.mark.parametrize("m, ell, k2", [(1, 1, 0.99), (2, 1, 0.95)])
    def test_bloch_partner_is_isospectral(self, m, ell, k2):
        model = make_model(m, ell, k2)
        eps = ground_energy(model) - 0.5
        grid = np.linspace(ground_energy(model) - 2.0, band_edges(model)[-1] + 2.0, 60)
        deviation = isospectral_compare(
            _sampler(model),
            lambda t: partner_bloch_closed_form(t, model, eps, 1),
            model.period,
            grid,
        )
        assert deviation < 1e-6


# ── Residual helpers ────────────────────────────────────────────────


class TestResiduals:
    def test_richardson_second_derivative(self):
        x = np.linspace(-2.0, 2.0, 11)
        d2 = richardson_second_derivative(np.sin, x, 1e-2)
        assert np.max(np.abs(d2 + np.sin(x))) < 1e-9

    def test_exact_solution_has_small_residual(self):
        x = np.linspace(0.0, 6.0, 50)
        residual = schrodinger_residual(np.sin, lambda t: np.zeros_like(t), 1.0, x,
                                        period=2.0 * math.pi)
        assert residual < 1e-9

    def test_analytic_second_derivative(self):
        x = np.linspace(0.0, 6.0, 50)
        residual = schrodinger_residual(np.cos, lambda t: np.zeros_like(t), 4.0, x,
                                        second_derivative=lambda t: -np.cos(t))
        assert residual == pytest.approx(0.75, rel=1e-12)

    @pytest.mark.parametrize("m, ell, k2", [(1, 1, 0.5), (2, 1, 0.95), (1, 0, 0.95), (2, 0, 0.95)])
    def test_exact_bloch_function_residual(self, m, ell, k2):
        model = make_model(m, ell, k2)
        edges = band_edges(model)
        x = np.linspace(0.0, model.period, 41)
        for energy in (ground_energy(model) - 0.5, 0.5 * (edges[0] + edges[1])):
            sol = bloch_solution(model, energy)
            residual = schrodinger_residual(
                lambda t: sol.psi(t, 1), _sampler(model), energy, x, period=model.period
            )
            assert residual < 1e-8
