"""Command implementations behind ``main.py``.

Every ``cmd_*`` function receives a validated :class:`RunConfig` and the
loaded :class:`Settings`, and returns a :class:`SampledCurve` (or a
:class:`VerificationReport` for ``verify``).  Writing the result is left
to the caller.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Callable

import numpy as np

from core import __version__
from core.ansatz import (
    ansatz_coefficients,
    fit_ansatz,
    fitted_residual,
    product_ode_residual,
)
from core.bloch import REALNESS_TOL, auxiliary_points, bloch_solution
from core.config import Settings
from core.elliptic import (
    inverse_wp,
    jacobi_sn_cn_dn,
    lattice_from_modulus,
    log_sigma,
    sigma_ratio,
    weier_zeta,
    wp,
    wp_prime,
)
from core.errors import DomainError, LameSusyError, SingularTransformationError
from core.lame import (
    band_edges,
    energy_transform,
    energy_window,
    ground_energy,
    make_model,
    potential,
)
from core.models import (
    AuxiliaryPoints,
    CheckResult,
    LameModel,
    RunConfig,
    SampledCurve,
    SeedSpec,
    VerificationReport,
)
from core.spectral import (
    assert_period,
    band_structure,
    classify,
    floquet_exponent,
    hill_discriminant,
    isospectral_compare,
    monodromy_batch,
)
from core.susy import (
    closed_form_params,
    constant_term_audit,
    defect_asymptotics,
    defect_bound_state,
    involution_residual,
    make_partner,
    partner_bloch_closed_form,
    partner_from_seed,
    seed_combination,
)

logger = logging.getLogger(__name__)

NORMALIZATION_TAG = "e1-e3=1; omega=K, omega'=iK'; z=x-iK'"
SUITES = ("elliptic", "solver", "susy", "spectral")
INJECTED_BUG = 1e-3


# ── Shared helpers ─────────────────────────────────────────────────────


def _potential_sampler(model: LameModel) -> Callable:
    return lambda x: potential(x, model)


def _metadata(model: LameModel) -> dict:
    return {
        "model": [model.m, model.ell],
        "k2": model.k2,
        "K": model.modulus.big_k,
        "Kp": model.modulus.big_kc,
        "normalization": NORMALIZATION_TAG,
        "version": __version__,
    }


def _points_metadata(points: AuxiliaryPoints) -> dict:
    return {
        "points": list(points.points),
        "wp_values": list(points.wp_values),
        "anchor": points.anchor,
        "sign_pairing": points.sign_pairing,
        "points_residual": points.residual,
    }


def _x_grid(config: RunConfig, model: LameModel, settings: Settings) -> np.ndarray:
    half = settings.grid("window") * model.modulus.big_k
    lo = -half if config.x_min is None else config.x_min
    hi = half if config.x_max is None else config.x_max
    if not lo < hi:
        raise DomainError(f"x range is empty: [{lo}, {hi}]")
    return np.linspace(lo, hi, config.samples)


def _period_grid(model: LameModel, settings: Settings) -> np.ndarray:
    return np.linspace(0.0, model.period, settings.grid("residual_points"), endpoint=False)


def _add_column(columns: dict, name: str, values) -> None:
    """Store *values* as one column, or as ``_re``/``_im`` columns when genuinely complex."""
    values = np.asarray(values)
    if np.iscomplexobj(values):
        size = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
        if not values.size or float(np.max(np.abs(values.imag))) <= REALNESS_TOL * size:
            columns[name] = values.real
            return
        columns[f"{name}_re"] = values.real
        columns[f"{name}_im"] = values.imag
    else:
        columns[name] = values


def _numeric_edges(model: LameModel, settings: Settings):
    sampler = _potential_sampler(model)
    assert_period(sampler, model.period)
    lo, hi = energy_window(model)
    grid = np.linspace(lo, hi, settings.grid("band_scan"))
    return band_structure(sampler, model.period, grid, edge_tol=settings.tolerance("edge"))


def _match_edges(analytic: list[float], found: list[float]) -> np.ndarray:
    found = np.asarray(found, dtype=float)
    if not found.size:
        return np.full(len(analytic), math.nan)
    return np.array([found[np.argmin(np.abs(found - e))] for e in analytic])


def _caption_deviation(points: AuxiliaryPoints, caption) -> float:
    resolved = np.array(points.points)
    targets = [complex(re, im) for re, im in caption]
    if len(targets) != resolved.size:
        return math.inf
    return float(max(np.min(np.abs(resolved - t)) for t in targets))


# ── band-edges ─────────────────────────────────────────────────────────


def cmd_band_edges(config: RunConfig, settings: Settings) -> SampledCurve:
    """Analytic band edges next to the ones located on the Hill discriminant."""
    model = make_model(config.m, config.ell, config.k2)
    analytic = np.array(band_edges(model))
    structure = _numeric_edges(model, settings)
    numeric = _match_edges(list(analytic), structure.edges)
    deviation = np.abs(numeric - analytic)
    logger.info("Band edges %s k2=%g: max deviation %.3e", model.label, model.k2,
                float(np.nanmax(deviation)))

    metadata = _metadata(model)
    metadata.update({
        "finite_bands": structure.finite_band_count,
        "finite_gaps": len(structure.gaps),
        "numeric_edges": structure.edges,
        "unresolved": structure.unresolved,
        "max_deviation": float(np.nanmax(deviation)),
    })
    columns = {
        "index": np.arange(analytic.size, dtype=float),
        "analytic": analytic,
        "numeric": numeric,
        "deviation": deviation,
    }
    return SampledCurve(columns=columns, metadata=metadata)


# ── bloch ──────────────────────────────────────────────────────────────


def cmd_bloch(config: RunConfig, settings: Settings) -> SampledCurve:
    """Both Bloch solutions, their log-derivatives and the Wronskian."""
    if config.energy is None:
        raise DomainError("the bloch command needs --energy")
    model = make_model(config.m, config.ell, config.k2)
    x = _x_grid(config, model, settings)
    sol = bloch_solution(model, config.energy)
    pair = sol.pair(x)

    columns = {"x": x, "V": potential(x, model)}
    _add_column(columns, "psi1", pair.psi1)
    _add_column(columns, "psi2", pair.psi2)
    _add_column(columns, "dlog1", pair.dlog1)
    _add_column(columns, "dlog2", pair.dlog2)
    if pair.degenerate:
        wronskian = np.zeros_like(x)
        variation = 0.0
    else:
        wronskian = sol.wronskian(x)
        scale = float(np.max(np.abs(wronskian)))
        variation = float(np.max(np.abs(wronskian - np.mean(wronskian)))) / scale if scale else 0.0
    _add_column(columns, "wronskian", wronskian)

    rho = sol.floquet_multiplier(1)
    discriminant = (rho + 1.0 / rho).real
    metadata = _metadata(model)
    metadata.update({
        "energy": config.energy,
        "etilde": energy_transform(config.energy, model).Etilde,
        **_points_metadata(sol.points),
        "residual": sol.riccati_residual(_period_grid(model, settings)),
        "wronskian_variation": variation,
        "degenerate": pair.degenerate,
        "floquet_multiplier": rho,
        "classification": classify(discriminant, settings.tolerance("edge")),
    })
    return SampledCurve(columns=columns, metadata=metadata)


# ── partner ────────────────────────────────────────────────────────────


def _bound_state_metadata(seed: SeedSpec) -> dict:
    state = defect_bound_state(seed)
    plus, minus, mu = defect_asymptotics(seed)
    return {
        "norm_squared": state.norm_squared,
        "decay_rate": state.decay_rate,
        "decay_left": state.decay_left,
        "decay_right": state.decay_right,
        "eigen_residual": state.eigen_residual,
        "dominant_plus": plus,
        "dominant_minus": minus,
        "floquet_exponent": abs(mu),
    }


def cmd_partner(config: RunConfig, settings: Settings) -> SampledCurve:
    """First-order SUSY partner of the seed ``psi1 + lambda psi2``.

    Bloch seeds (lambda 0 or infinite) give both partner routes and their
    deviation; mixed seeds give the defect partner and the normalised bound
    state ``1/u``.
    """
    if config.epsilon is None:
        raise DomainError("the partner command needs --epsilon")
    model = make_model(config.m, config.ell, config.k2)
    seed = SeedSpec.from_lambda(config.epsilon, config.lambda_mix, model, config.allow_unsafe)
    x = _x_grid(config, model, settings)
    description = make_partner(seed)
    numeric = partner_from_seed(x, seed)

    metadata = _metadata(model)
    metadata.update({
        "epsilon": seed.epsilon,
        "lambda": seed.lambda_mix,
        "theta": seed.theta,
        "kind": description.kind,
        "nodeless_guaranteed": description.nodeless_guaranteed,
        **_points_metadata(auxiliary_points(model, seed.epsilon)),
    })
    columns = {"x": x, "V": potential(x, model)}

    if seed.is_bloch:
        closed = partner_bloch_closed_form(x, model, seed.epsilon, seed.which)
        columns["V_closed"] = closed
        columns["V_numeric"] = numeric
        columns["deviation"] = np.abs(closed - numeric)
        offset, spread = constant_term_audit(model, seed.epsilon, seed.which)
        metadata.update({
            "which": seed.which,
            "closed_form_params": [list(p) for p in closed_form_params(model, seed.epsilon,
                                                                       seed.which)],
            "max_deviation": float(np.max(columns["deviation"])),
            "printed_form_offset": offset,
            "printed_form_spread": spread,
        })
        return SampledCurve(columns=columns, metadata=metadata)

    bound = _bound_state_metadata(seed)
    u, _ = seed_combination(x, seed)
    with np.errstate(over="ignore", divide="ignore"):
        phi = 1.0 / (u * math.sqrt(bound["norm_squared"]))
    columns["V_partner"] = numeric
    columns["phi"] = phi
    metadata["bound_state"] = bound
    metadata["involution_residual"] = involution_residual(x, seed)
    return SampledCurve(columns=columns, metadata=metadata)


# ── figure ─────────────────────────────────────────────────────────────


def cmd_figure(name: str, config: RunConfig, settings: Settings) -> SampledCurve:
    """Curves of a published figure: the potential and its defect partner."""
    params = settings.figure(name)
    model = make_model(int(params["m"]), int(params["ell"]), float(params["k2"]))
    seed = SeedSpec.from_lambda(float(params["epsilon"]), float(params["lambda"]), model)
    x = _x_grid(config, model, settings)

    points = auxiliary_points(model, seed.epsilon)
    caption = params.get("caption_points", [])
    deviation = _caption_deviation(points, caption) if caption else math.nan
    if deviation > settings.tolerance("figure_points"):
        logger.warning("%s: auxiliary points deviate from the caption by %.3e", name, deviation)

    metadata = _metadata(model)
    metadata.update({
        "figure": name,
        "epsilon": seed.epsilon,
        "lambda": seed.lambda_mix,
        **_points_metadata(points),
        "caption_points": [complex(re, im) for re, im in caption],
        "point_deviation": deviation,
        "bound_state": _bound_state_metadata(seed),
    })
    columns = {
        "x": x,
        "V_gray": potential(x, model),
        "V_black": partner_from_seed(x, seed),
    }
    return SampledCurve(columns=columns, metadata=metadata)


# ── verify ─────────────────────────────────────────────────────────────


class _Checks:
    """Collects measured values against named tolerances into a report."""

    def __init__(self, report: VerificationReport, settings: Settings) -> None:
        self.report = report
        self.settings = settings
        self.suite = ""

    def add(self, name: str, tolerance: str, measure: Callable[[], float]) -> None:
        self._record(name, self.settings.tolerance(tolerance), measure)

    def flag(self, name: str, predicate: Callable[[], bool]) -> None:
        self._record(name, 0.5, lambda: 0.0 if predicate() else 1.0)

    def _record(self, name: str, tolerance: float, measure: Callable[[], float]) -> None:
        try:
            value = float(measure())
        except (LameSusyError, ArithmeticError, ValueError) as exc:
            logger.error("[%s] %s raised %s: %s", self.suite, name, type(exc).__name__, exc)
            value = math.inf
        result = CheckResult(self.suite, name, tolerance, value)
        self.report.checks.append(result)
        level = logging.INFO if result.passed else logging.ERROR
        logger.log(level, "[%s] %s %s: measured %.3e, tolerance %.1e", self.suite,
                   "PASS" if result.passed else "FAIL", name, value, tolerance)


def _relative(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def _random_cell_points(rng: np.random.Generator, lat, count: int) -> np.ndarray:
    z = rng.uniform(-lat.omega, lat.omega, count) \
        + 1j * rng.uniform(-lat.omegap.imag, lat.omegap.imag, count)
    return np.where(np.abs(z) < 0.5, z + 1.0, z)


def _suite_elliptic(checks: _Checks, settings: Settings, rng: np.random.Generator) -> None:
    count = settings.grid("random_points")
    for k2 in settings.section("verify").get("moduli", [0.5, 0.95, 0.99]):
        k2 = float(k2)
        lat = lattice_from_modulus(k2)
        tag = f"k2={k2:g}"
        x = rng.uniform(-4.0 * lat.omega, 4.0 * lat.omega, count)
        z = _random_cell_points(rng, lat, count)

        def pythagoras() -> float:
            sn, cn, dn = jacobi_sn_cn_dn(x, k2)
            return max(float(np.max(np.abs(sn * sn + cn * cn - 1.0))),
                       float(np.max(np.abs(dn * dn + k2 * sn * sn - 1.0))))

        def legendre() -> float:
            zeta3 = complex(weier_zeta(lat.omegap, lat))
            return abs(lat.eta * lat.omegap - zeta3 * lat.omega - 0.5j * math.pi)

        def wp_equation() -> float:
            w, wd = np.asarray(wp(z, lat)), np.asarray(wp_prime(z, lat))
            lhs = wd * wd
            rhs = 4.0 * w ** 3 - lat.g2 * w - lat.g3
            return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))))

        def sigma_quasi() -> float:
            worst = 0.0
            for step, eta in ((lat.omega, lat.eta), (lat.omegap, lat.etap)):
                lhs = np.asarray(log_sigma(z + 2.0 * step, lat, reduce=False))
                rhs = np.asarray(log_sigma(z, lat, reduce=False)) + 1j * math.pi \
                    + 2.0 * eta * (z + step)
                worst = max(worst, float(np.max(np.abs(np.exp(lhs - rhs) - 1.0))))
            return worst

        def zeta_quasi() -> float:
            worst = 0.0
            for step, eta in ((lat.omega, lat.eta), (lat.omegap, lat.etap)):
                base = np.asarray(weier_zeta(z, lat, reduce=False))
                moved = np.asarray(weier_zeta(z + 2.0 * step, lat, reduce=False))
                worst = max(worst, _relative(moved, base + 2.0 * eta))
            return worst

        def parity() -> float:
            return max(_relative(wp(-z, lat), wp(z, lat)),
                       _relative(-np.asarray(weier_zeta(-z, lat)), weier_zeta(z, lat)))

        def cross_route() -> float:
            return _relative(wp(z, lat, route="theta"), wp(z, lat))

        def sigma_derivative() -> float:
            h = 1e-3
            ratio = {j: np.asarray(sigma_ratio(z, j * h, lat)) for j in (-2, -1, 1, 2)}
            stencil = (-ratio[2] + 8 * ratio[1] - 8 * ratio[-1] + ratio[-2]) / (12 * h)
            return _relative(stencil, weier_zeta(z, lat))

        def roundtrip() -> float:
            targets = rng.uniform(-2.0, 2.0, 20) + 1j * rng.uniform(-1.0, 1.0, 20)
            targets = np.concatenate([targets, rng.uniform(-3.0, 3.0, 10)])
            found = np.array([wp(inverse_wp(c, lat), lat) for c in targets])
            return _relative(found, targets)

        checks.add(f"jacobi identities {tag}", "identity", pythagoras)
        checks.add(f"legendre relation {tag}", "legendre", legendre)
        checks.add(f"wp differential equation {tag}", "wp_equation", wp_equation)
        checks.add(f"jacobi vs theta route {tag}", "cross_route", cross_route)
        checks.add(f"sigma quasi-periodicity {tag}", "quasi_periodicity", sigma_quasi)
        checks.add(f"zeta quasi-periodicity {tag}", "quasi_periodicity", zeta_quasi)
        checks.add(f"parity {tag}", "identity", parity)
        checks.add(f"d log sigma = zeta {tag}", "derivative", sigma_derivative)
        checks.add(f"inverse wp roundtrip {tag}", "inverse_wp", roundtrip)


def _suite_solver(checks: _Checks, model: LameModel, settings: Settings,
                  rng: np.random.Generator, inject_bug: bool) -> None:
    lo, hi = settings.section("verify").get("energy_range", [0.0, 12.0])
    energies = rng.uniform(float(lo), float(hi), settings.grid("verify_energies"))
    grid = _period_grid(model, settings)
    lat = model.lattice

    def product_ode() -> float:
        worst = 0.0
        for energy in energies:
            coeffs = ansatz_coefficients(model, energy_transform(energy, model).Etilde)
            if inject_bug:
                bugged = (coeffs.coeffs[0] + INJECTED_BUG, *coeffs.coeffs[1:])
                coeffs = dataclasses.replace(coeffs, coeffs=bugged)
            worst = max(worst, product_ode_residual(model, energy, coeffs=coeffs))
        return worst

    def fit_published() -> float:
        worst = 0.0
        for m, ell in ((1, 1), (2, 1)):
            reference = make_model(m, ell, model.k2)
            for etilde in rng.uniform(-3.0, 3.0, 10):
                published = ansatz_coefficients(reference, etilde)
                fitted = fit_ansatz(m, ell, lat, etilde, published.r_min, published.r_max)
                if fitted is None:
                    return math.inf
                expected = np.array(published.coeffs)
                worst = max(worst, float(np.max(np.abs(np.array(fitted.coeffs) - expected)))
                            / max(1.0, float(np.max(np.abs(expected)))))
        return worst

    def fit_three_two() -> float:
        worst = 0.0
        for etilde in rng.uniform(-3.0, 3.0, 5):
            fitted = fit_ansatz(3, 2, lat, etilde, -2, 3)
            if fitted is None:
                return math.inf
            worst = max(worst, fitted_residual(3, 2, lat, fitted))
        return worst

    def schrodinger() -> float:
        return max(bloch_solution(model, e).riccati_residual(grid) for e in energies)

    def wronskian() -> float:
        worst = 0.0
        for energy in energies:
            sol = bloch_solution(model, energy)
            if sol.degenerate:
                continue
            w = sol.wronskian(grid)
            worst = max(worst, float(np.max(np.abs(w - np.mean(w)))) / float(np.max(np.abs(w))))
        return worst

    def reconstruction() -> float:
        worst = 0.0
        z = grid - lat.omegap
        p = np.asarray(wp(z, lat)) - lat.e1
        for energy in energies[:20]:
            sol = bloch_solution(model, energy)
            product = sol.psi(grid, 1) * sol.psi(grid, 2)
            coeffs = ansatz_coefficients(model, energy_transform(energy, model).Etilde)
            ansatz = sum(c * p ** (coeffs.r_min + i) for i, c in enumerate(coeffs.laurent()))
            anchor = int(np.argmax(np.abs(ansatz)))
            scaled = ansatz * (product[anchor] / ansatz[anchor])
            worst = max(worst, float(np.max(np.abs(product - scaled)) / np.max(np.abs(scaled))))
        return worst

    def floquet() -> float:
        sample = energies[:20]
        mono = monodromy_batch(_potential_sampler(model), model.period, sample)
        worst = 0.0
        for energy, result in zip(sample, mono):
            rho = bloch_solution(model, energy).floquet_multiplier(1)
            d_bloch = (rho + 1.0 / rho).real
            worst = max(worst, abs(d_bloch - result.discriminant)
                        / max(1.0, abs(result.discriminant)))
        return worst

    def edges() -> float:
        structure = _numeric_edges(model, settings)
        analytic = band_edges(model)
        return float(np.max(np.abs(_match_edges(analytic, structure.edges) - analytic)))

    checks.add(f"product equation {model.label}", "product_ode", product_ode)
    checks.add("fit reproduces published coefficients", "fit", fit_published)
    checks.add("fit (3,2) over powers -2..3", "product_ode", fit_three_two)
    checks.add(f"schrodinger residual {model.label}", "schrodinger", schrodinger)
    checks.add(f"wronskian constancy {model.label}", "wronskian", wronskian)
    checks.add(f"product reconstruction {model.label}", "reconstruction", reconstruction)
    checks.add(f"floquet multiplier vs monodromy {model.label}", "floquet", floquet)
    checks.add(f"band edges vs discriminant {model.label}", "band_edge", edges)
    for name in settings.figure_names:
        params = settings.figure(name)

        def figure_points(params=params) -> float:
            fig_model = make_model(int(params["m"]), int(params["ell"]), float(params["k2"]))
            points = auxiliary_points(fig_model, float(params["epsilon"]))
            return _caption_deviation(points, params["caption_points"])

        checks.add(f"{name} auxiliary points", "figure_points", figure_points)


def _suite_susy(checks: _Checks, model: LameModel, settings: Settings) -> None:
    e0 = ground_energy(model)
    grid = _period_grid(model, settings)

    def closed_form() -> float:
        worst = 0.0
        for eps in (e0 - 0.05, e0 - 0.5, e0 - 1.5):
            for lam in (0.0, math.inf):
                seed = SeedSpec.from_lambda(eps, lam, model)
                numeric = partner_from_seed(grid, seed)
                closed = partner_bloch_closed_form(grid, model, eps, seed.which)
                worst = max(worst, float(np.max(np.abs(closed - numeric)))
                            / max(1.0, float(np.max(np.abs(numeric)))))
        return worst

    def isospectral() -> float:
        eps = e0 - 0.5
        top = band_edges(model)[-1]
        energies = np.linspace(e0 - 2.0, top + 2.0, settings.grid("isospectral"))
        worst = 0.0
        for which in (1, 2):
            worst = max(worst, isospectral_compare(
                _potential_sampler(model),
                lambda t, which=which: partner_bloch_closed_form(t, model, eps, which),
                model.period, energies,
            ))
        return worst

    def audit() -> float:
        offset, spread = constant_term_audit(model, e0 - 0.5, 1)
        logger.info("Printed partner form: offset %.6g, spread %.6g", offset, spread)
        return 0.0

    checks.add(f"closed-form partner {model.label}", "closed_form", closed_form)
    checks.add(f"isospectral partner {model.label}", "isospectral", isospectral)
    checks.add("printed partner audit runs", "closed_form", audit)

    for name in settings.figure_names:
        params = settings.figure(name)
        fig_model = make_model(int(params["m"]), int(params["ell"]), float(params["k2"]))
        seed = SeedSpec.from_lambda(float(params["epsilon"]), float(params["lambda"]), fig_model)
        x = np.linspace(-4.0 * fig_model.modulus.big_k, 4.0 * fig_model.modulus.big_k, 401)
        state_box: dict = {}

        def state(seed=seed):
            if "state" not in state_box:
                state_box["state"] = defect_bound_state(seed)
            return state_box["state"]

        def decay(seed=seed, fig_model=fig_model) -> float:
            d = hill_discriminant(_potential_sampler(fig_model), fig_model.period, seed.epsilon)
            mu = floquet_exponent(d, fig_model.period)
            return abs(state().decay_rate - mu) / mu

        def negative(fig_model=fig_model, eps=seed.epsilon) -> bool:
            try:
                partner_from_seed(x, SeedSpec.from_lambda(eps, -1.0, fig_model))
            except SingularTransformationError as exc:
                return exc.node is not None
            return False

        checks.add(f"{name} involution", "involution",
                   lambda seed=seed, x=x: involution_residual(x, seed))
        checks.add(f"{name} bound-state residual", "eigen_residual",
                   lambda: state().eigen_residual)
        checks.flag(f"{name} bound state normalizable",
                    lambda: math.isfinite(state().norm_squared) and state().norm_squared > 0.0)
        checks.add(f"{name} decay matches floquet exponent", "decay_rate", decay)
        checks.flag(f"{name} negative lambda rejected with node", negative)


def _suite_spectral(checks: _Checks, model: LameModel, settings: Settings) -> None:
    sampler = _potential_sampler(model)
    lo, hi = energy_window(model)
    energies = np.linspace(lo, hi, 40)
    period = model.period

    def determinant() -> float:
        results = monodromy_batch(sampler, period, energies)
        return max(abs(r.determinant - 1.0) / max(1.0, abs(r.m11 * r.m22)) for r in results)

    def translation() -> float:
        base = hill_discriminant(sampler, period, energies)
        moved = hill_discriminant(sampler, period, energies, x0=0.37 * model.modulus.big_k)
        return _relative(moved, base)

    def refinement() -> float:
        base = hill_discriminant(sampler, period, energies)
        fine = hill_discriminant(sampler, period, energies, rtol=5e-12, atol=5e-14)
        return _relative(fine, base)

    def free_particle() -> float:
        length = 2.0 * math.pi
        grid = np.linspace(0.1, 10.0, 25)
        found = hill_discriminant(lambda t: 0.0, length, grid)
        return _relative(found, 2.0 * np.cos(np.sqrt(grid) * length))

    def counts() -> bool:
        structure = _numeric_edges(model, settings)
        expected = (len(band_edges(model)) - 1) // 2
        return structure.finite_band_count == expected and len(structure.gaps) == expected

    def periodic() -> bool:
        assert_period(sampler, period)
        return True

    checks.flag(f"potential periodic {model.label}", periodic)
    checks.add(f"monodromy determinant {model.label}", "determinant", determinant)
    checks.add(f"translation invariance {model.label}", "translation", translation)
    checks.add(f"step refinement {model.label}", "refinement", refinement)
    checks.add("free particle discriminant", "refinement", free_particle)
    checks.flag(f"band and gap counts {model.label}", counts)


def cmd_verify(
    config: RunConfig,
    settings: Settings,
    suite: str = "all",
    inject_bug: bool = False,
) -> VerificationReport:
    """Run the named verification suite (or all of them) on the configured model."""
    names = SUITES if suite == "all" else (suite,)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise DomainError(f"unknown suite '{suite}'; choose from {', '.join(SUITES)} or all")

    model = make_model(config.m, config.ell, config.k2)
    rng = np.random.default_rng(int(settings.section("verify").get("seed", 0)))
    report = VerificationReport()
    checks = _Checks(report, settings)
    if inject_bug:
        logger.warning("Injecting a %.0e coefficient perturbation into the solver suite",
                       INJECTED_BUG)

    for name in names:
        checks.suite = name
        logger.info("Running %s suite on %s k2=%g", name, model.label, model.k2)
        if name == "elliptic":
            _suite_elliptic(checks, settings, rng)
        elif name == "solver":
            _suite_solver(checks, model, settings, rng, inject_bug)
        elif name == "susy":
            _suite_susy(checks, model, settings)
        else:
            _suite_spectral(checks, model, settings)

    summary = report.summary()
    logger.info("Verification finished: %d checks, %d passed, %d failed",
                summary["checks"], summary["passed"], summary["failed"])
    return report


def report_lines(report: VerificationReport) -> list[str]:
    """Plain-text table of a report, one check per line."""
    lines = []
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        lines.append(f"{status}  {check.suite:<9} {check.name:<48} "
                     f"measured={check.measured:.3e}  tol={check.tolerance:.1e}")
    summary = report.summary()
    lines.append(f"{summary['passed']}/{summary['checks']} checks passed, "
                 f"{summary['failed']} failed")
    return lines
