"""Tests for seeds, SUSY partners and the defect bound state."""

from __future__ import annotations

import math

import numpy as np
import pytest

from core.errors import DomainError, SingularTransformationError
from core.lame import ground_energy, make_model, potential
from core.models import PartnerKind, SeedSpec
from core.spectral import floquet_exponent, hill_discriminant
from core.susy import (
    closed_form_params,
    constant_term_audit,
    defect_asymptotics,
    defect_bound_state,
    involution_residual,
    make_partner,
    nodeless_check,
    partner_bloch_closed_form,
    partner_from_seed,
    seed_combination,
    validate_seed,
)

FIGURES = [
    (1, 1, 0.99, 2.4, 1.5),
    (2, 1, 0.95, 3.5, 1.0),
]


def _seed(m, ell, k2, eps, lam, **kwargs):
    return SeedSpec.from_lambda(eps, lam, make_model(m, ell, k2), **kwargs)


# ── Seeds ───────────────────────────────────────────────────────────


class TestSeed:
    def test_lambda_angle(self):
        model = make_model(1, 1, 0.5)
        seed = SeedSpec.from_lambda(1.0, 1.0, model)
        assert seed.theta == pytest.approx(math.pi / 4)
        assert seed.lambda_mix == pytest.approx(1.0)
        assert not seed.is_bloch

    def test_infinite_lambda_selects_second_solution(self):
        seed = SeedSpec.from_lambda(1.0, math.inf, make_model(1, 1, 0.5))
        assert seed.is_bloch
        assert seed.which == 2
        assert seed.weights == (0.0, 1.0)
        assert math.isinf(seed.lambda_mix)

    def test_zero_lambda_selects_first_solution(self):
        seed = SeedSpec.from_lambda(1.0, 0.0, make_model(1, 1, 0.5))
        assert seed.is_bloch
        assert seed.which == 1

    def test_energy_above_ground_rejected(self):
        model = make_model(1, 1, 0.99)
        seed = SeedSpec.from_lambda(ground_energy(model) + 0.1, 0.0, model)
        with pytest.raises(DomainError):
            validate_seed(seed)

    def test_energy_above_ground_allowed_when_unsafe(self):
        model = make_model(1, 1, 0.99)
        seed = SeedSpec.from_lambda(ground_energy(model) + 0.1, 0.0, model, allow_unsafe=True)
        validate_seed(seed)

    def test_positive_lambda_is_nodeless(self):
        assert nodeless_check(_seed(1, 1, 0.99, 2.4, 1.5)).nodeless

    def test_negative_lambda_has_node(self):
        scan = nodeless_check(_seed(1, 1, 0.99, 2.4, -1.0))
        assert not scan.nodeless
        assert scan.first_node is not None

    @pytest.mark.parametrize("m, ell, k2, eps, lam", FIGURES)
    def test_negative_lambda_node_is_refined(self, m, ell, k2, eps, lam):
        seed = _seed(m, ell, k2, eps, -lam)
        scan = nodeless_check(seed)
        assert not scan.nodeless
        node = scan.first_node
        u, _ = seed_combination(np.array([node - 1e-3, node + 1e-3]), seed)
        assert np.sign(u[0]) != np.sign(u[1])

    @pytest.mark.parametrize("m, ell, k2", [(1, 1, 0.99), (1, 1, 0.5), (2, 1, 0.95)])
    def test_ground_energy_seed_is_nodeless(self, m, ell, k2):
        model = make_model(m, ell, k2)
        for lam in (0.0, 1.0, math.inf):
            seed = SeedSpec.from_lambda(ground_energy(model), lam, model)
            assert nodeless_check(seed).nodeless

    def test_seed_is_positive(self):
        u, dlog_u = seed_combination(np.linspace(-8.0, 8.0, 101), _seed(1, 1, 0.99, 2.4, 1.5))
        assert np.all(u > 0.0)
        assert np.all(np.isfinite(dlog_u))


# ── Periodic partners ───────────────────────────────────────────────


class TestBlochPartner:
    @pytest.mark.parametrize("m, ell, k2", [(1, 1, 0.99), (2, 1, 0.95), (1, 1, 0.5)])
    @pytest.mark.parametrize("offset", [0.05, 0.5, 1.5])
    def test_closed_form_matches_identity(self, m, ell, k2, offset):
        model = make_model(m, ell, k2)
        eps = ground_energy(model) - offset
        x = np.linspace(0.0, model.period, 200, endpoint=False)
        for lam in (0.0, math.inf):
            seed = SeedSpec.from_lambda(eps, lam, model)
            numeric = partner_from_seed(x, seed)
            closed = partner_bloch_closed_form(x, model, eps, seed.which)
            assert np.max(np.abs(closed - numeric)) / max(1.0, np.max(np.abs(numeric))) < 1e-8

    def test_partner_is_periodic(self):
        model = make_model(2, 1, 0.95)
        eps = ground_energy(model) - 0.5
        x = np.linspace(0.0, 2.0, 21)
        a = partner_bloch_closed_form(x, model, eps, 1)
        b = partner_bloch_closed_form(x + model.period, model, eps, 1)
        assert np.max(np.abs(a - b)) < 1e-10

    def test_closed_form_params_per_point(self):
        model = make_model(2, 1, 0.95)
        params = closed_form_params(model, 3.0, 1)
        assert len(params) == 3
        flipped = closed_form_params(model, 3.0, 2)
        for (a1, b1), (a2, b2) in zip(params, flipped):
            assert abs(a1 - a2) < 1e-10 * max(1.0, abs(a1))
            assert abs(b1 + b2) < 1e-10 * max(1.0, abs(b1))

    def test_constant_term_audit_returns_offsets(self):
        model = make_model(1, 1, 0.99)
        offset, spread = constant_term_audit(model, 2.0, 1, samples=101)
        assert math.isfinite(offset)
        assert spread >= 0.0

    def test_make_partner_kinds(self):
        model = make_model(1, 1, 0.99)
        bloch = make_partner(SeedSpec.from_lambda(2.0, 0.0, model))
        assert bloch.kind is PartnerKind.PERIODIC_BLOCH
        assert len(bloch.closed_form_params) == 2
        defect = make_partner(SeedSpec.from_lambda(2.4, 1.5, model))
        assert defect.kind is PartnerKind.DEFECT
        assert defect.nodeless_guaranteed


# ── Defect partners ─────────────────────────────────────────────────


class TestDefectPartner:
    @pytest.mark.parametrize("m, ell, k2, eps, lam", FIGURES)
    def test_partner_is_finite(self, m, ell, k2, eps, lam):
        seed = _seed(m, ell, k2, eps, lam)
        x = np.linspace(-4.0 * seed.model.modulus.big_k, 4.0 * seed.model.modulus.big_k, 401)
        partner = partner_from_seed(x, seed)
        assert partner.shape == x.shape
        assert np.all(np.isfinite(partner))

    def test_partner_approaches_periodic_far_away(self):
        seed = _seed(1, 1, 0.99, 2.4, 1.5)
        model = seed.model
        far = 12.0 * model.period + np.linspace(0.0, model.period, 50)
        diff = partner_from_seed(far, seed) - partner_from_seed(far + model.period, seed)
        assert np.max(np.abs(diff)) < 1e-6

    @pytest.mark.parametrize("m, ell, k2, eps, lam", FIGURES)
    def test_involution_restores_potential(self, m, ell, k2, eps, lam):
        seed = _seed(m, ell, k2, eps, lam)
        x = np.linspace(-10.0, 10.0, 201)
        assert involution_residual(x, seed) < 1e-9

    @pytest.mark.parametrize("m, ell, k2, eps, lam", FIGURES)
    def test_bound_state(self, m, ell, k2, eps, lam):
        seed = _seed(m, ell, k2, eps, lam)
        state = defect_bound_state(seed)
        assert state.eigen_residual < 1e-6
        assert 0.0 < state.norm_squared < math.inf

        model = seed.model
        sampler = lambda t: potential(t, model)  # noqa: E731
        mu = floquet_exponent(hill_discriminant(sampler, model.period, eps), model.period)
        assert state.decay_rate == pytest.approx(mu, rel=1e-2)

    def test_asymptotics_pick_growing_solution(self):
        seed = _seed(1, 1, 0.99, 2.4, 1.5)
        plus, minus, mu = defect_asymptotics(seed)
        assert {plus, minus} == {1, 2}
        assert mu != 0.0

    def test_bloch_seed_has_no_bound_state(self):
        with pytest.raises(SingularTransformationError):
            defect_bound_state(_seed(1, 1, 0.99, 2.4, 0.0))

    @pytest.mark.parametrize("m, ell, k2, eps, lam", FIGURES)
    def test_negative_lambda_rejected_with_node(self, m, ell, k2, eps, lam):
        seed = _seed(m, ell, k2, eps, -1.0)
        with pytest.raises(SingularTransformationError) as info:
            partner_from_seed(np.linspace(-5.0, 5.0, 101), seed)
        assert info.value.node is not None
