"""First-order SUSY (Darboux) partners of the associated Lamé potentials.

A nodeless seed ``u`` solving ``-u'' + V u = eps u`` gives the partner

    V~ = V - 2 (ln u)'' = 2 (u'/u)^2 - V + 2 eps,

where the second form eliminates ``u''`` through the Schrödinger equation.
With a single Bloch function as seed the partner is periodic and strictly
isospectral; a positive combination ``u = psi1 + lambda psi2`` creates a
periodicity defect that binds one extra state ``1/u`` at ``eps``.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from core.bloch import bloch_solution
from core.elliptic import jacobi_complex, jacobi_sn_cn_dn
from core.errors import (
    DomainError,
    NonNormalizableError,
    SingularTransformationError,
)
from core.lame import ground_energy, potential
from core.models import (
    DefectState,
    LameModel,
    NodeScan,
    PartnerKind,
    PartnerPotential,
    SeedSpec,
)

logger = logging.getLogger(__name__)

NODE_XTOL = 1e-10
SEED_FLOOR = 1e-14
PARTNER_REALNESS_TOL = 1e-9
AUDIT_TOL = 1e-6
DEFAULT_SCAN_PERIODS = 10
MAX_TAIL_PERIODS = 50
TAIL_RTOL = 1e-10


# ── Seed handling ──────────────────────────────────────────────────────


def validate_seed(seed: SeedSpec) -> None:
    """Reject seeds whose partner is not guaranteed regular.

    ``eps > E0`` is only accepted with ``allow_unsafe`` (and logged).

    Raises
    ------
    DomainError
        If ``eps > E0`` without the override.
    """
    e0 = ground_energy(seed.model)
    if seed.epsilon > e0 + 1e-12:
        if not seed.allow_unsafe:
            raise DomainError(
                f"factorization energy {seed.epsilon} lies above E0={e0:.12g}; "
                "pass allow_unsafe to proceed without a nodeless guarantee"
            )
        logger.warning(
            "Seed energy %.6g above E0=%.6g: the partner may be singular",
            seed.epsilon, e0,
        )


def _seed_logs(x, seed: SeedSpec):
    """``(log|u|, sign(u), u'/u, scaled u)`` for the seed on *x*.

    The two Bloch terms are rescaled by their common maximum before being
    added, so the combination stays finite far from the reference point.
    """
    sol = bloch_solution(seed.model, seed.epsilon)
    w1, w2 = seed.weights
    x = np.asarray(x, dtype=float)

    if w2 == 0.0:
        terms = [(w1, 1)]
    elif w1 == 0.0:
        terms = [(w2, 2)]
    else:
        terms = [(w1, 1), (w2, 2)]

    logs = [sol.log_psi(x, which) for _, which in terms]
    peak = np.max(np.stack([lg.real for lg in logs]), axis=0)
    parts = [w * np.exp(lg - peak) for (w, _), lg in zip(terms, logs)]
    slopes = [part * sol.dlog(x, which) for part, (_, which) in zip(parts, terms)]

    # realness is judged against the Bloch terms, not against u itself,
    # which vanishes at a node
    scaled = _real_or_raise(sum(parts), "seed", scale=sum(np.abs(p) for p in parts))
    weighted_dlog = _real_or_raise(
        sum(slopes), "seed derivative", scale=sum(np.abs(s) for s in slopes)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        dlog_u = weighted_dlog / scaled
        log_abs = peak + np.log(np.abs(scaled))
    return log_abs, np.sign(scaled), dlog_u, scaled


def _real_or_raise(values, what: str, scale=None) -> np.ndarray:
    """Real part of *values*; DomainError when the imaginary part exceeds rounding.

    Without *scale* the imaginary part is measured against ``max |values|``;
    with it, pointwise against *scale*.
    """
    values = np.asarray(values)
    if not np.iscomplexobj(values):
        return values
    if scale is None:
        size = float(np.max(np.abs(values))) if values.size else 1.0
        residue = float(np.max(np.abs(values.imag))) / size if size else 0.0
    else:
        scale = np.asarray(scale, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(scale > 0.0, np.abs(values.imag) / scale, 0.0)
        residue = float(np.max(ratio)) if ratio.size else 0.0
    if residue > PARTNER_REALNESS_TOL:
        raise DomainError(
            f"{what} is complex (relative imaginary part {residue:.2e}); "
            "the factorization energy lies inside an allowed band"
        )
    return values.real


def seed_combination(x, seed: SeedSpec):
    """Return ``(u, u'/u)`` for ``u = w1 psi1 + w2 psi2`` on *x*.

    The log-derivative is assembled from the analytic Bloch log-derivatives,
    without numerical differentiation.

    Raises
    ------
    SingularTransformationError
        If ``|u|`` falls below ``SEED_FLOOR`` relative to its Bloch terms.
    """
    log_abs, sign, dlog_u, scaled = _seed_logs(x, seed)
    tiny = np.abs(scaled) < SEED_FLOOR
    if np.any(tiny):
        node = float(np.asarray(x, dtype=float).reshape(-1)[int(np.argmax(tiny.reshape(-1)))])
        raise SingularTransformationError(f"seed vanishes at x={node:.12g}", node=node)
    with np.errstate(over="ignore"):
        u = sign * np.exp(log_abs)
    return u, dlog_u


def nodeless_check(
    seed: SeedSpec,
    x_range: Optional[tuple[float, float]] = None,
    samples: int = 4001,
) -> NodeScan:
    """Scan the seed for sign changes and refine the first node.

    The default range covers ``DEFAULT_SCAN_PERIODS`` periods on both sides
    of the origin; the first sign change is bisected to ``NODE_XTOL``.
    """
    if x_range is None:
        half = DEFAULT_SCAN_PERIODS * seed.model.period
        x_range = (-half, half)
    x = np.linspace(x_range[0], x_range[1], samples)
    _, sign, _, _ = _seed_logs(x, seed)

    zero = np.nonzero(sign == 0)[0]
    change = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if zero.size and (not change.size or zero[0] <= change[0]):
        node = float(x[zero[0]])
        logger.info("Seed has a node at x=%.12g", node)
        return NodeScan(nodeless=False, first_node=node)
    if not change.size:
        return NodeScan(nodeless=True)

    i = int(change[0])

    def scaled_seed(t: float) -> float:
        return float(_seed_logs(np.array([t]), seed)[3][0])

    node = optimize.brentq(scaled_seed, x[i], x[i + 1], xtol=NODE_XTOL)
    logger.info("Seed has a node at x=%.12g", node)
    return NodeScan(nodeless=False, first_node=float(node))


def _reject_nodes(seed: SeedSpec, x=None) -> None:
    if seed.theta >= 0.0:
        return
    span = None
    if x is not None:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pad = seed.model.period
        span = (float(x.min()) - pad, float(x.max()) + pad)
    scan = nodeless_check(seed, span)
    if scan.nodeless and span is not None:
        scan = nodeless_check(seed)
    where = f" at x={scan.first_node:.12g}" if scan.first_node is not None else ""
    raise SingularTransformationError(
        f"seed with lambda={seed.lambda_mix:.6g} < 0 has a node{where}",
        node=scan.first_node,
    )


# ── Partners ───────────────────────────────────────────────────────────


def closed_form_params(model: LameModel, epsilon: float, which: int = 1):
    """``(alpha^2, beta)`` for every auxiliary point of the seed.

    With ``w = tau - iK'`` these are ``alpha^2 = -sn^2 w`` and
    ``beta = sn w cn w dn w``, the same values as
    ``-1/(k^2 sn^2 tau)`` and ``-cn tau dn tau/(k^2 sn^3 tau)`` without the
    division by ``sn tau``.  ``which = 2`` uses ``-tau`` (``beta`` flips).
    """
    sol = bloch_solution(model, epsilon)
    tau = np.array(sol.points.points) * (1 if which == 1 else -1)
    sn, cn, dn = jacobi_complex(tau - model.lattice.omegap, model.k2, guard=None)
    return tuple(
        (complex(a), complex(b))
        for a, b in zip(np.atleast_1d(-sn * sn), np.atleast_1d(sn * cn * dn))
    )


def partner_bloch_closed_form(x, model: LameModel, epsilon: float, which: int = 1):
    """Periodic partner for the Bloch seed ``psi_which``.

    Evaluates

        V~ = m(m-1) k^2 sn^2 x + l(l-1) k^2 cd^2 x
             + sum_r [2 k^2 sn^2 x - 2 H'(x; tau_r)] + C,

    where ``2 k^2 sn^2(x + tau) = 2 k^2 sn^2 x - 2 H'`` and ``H'`` is the
    rational function of ``sn x, cn x, dn x`` built from ``alpha^2`` and
    ``beta`` of each point (see :func:`closed_form_params`), and
    ``C = l(l+1)(e3 - e1 + 1)``, which vanishes on the normalised lattice.

    Raises
    ------
    SingularTransformationError
        If a denominator ``sn^2 x + alpha^2`` vanishes on the real line.
    DomainError
        If the partner is not real (seed energy inside a band).
    """
    x = np.asarray(x, dtype=float)
    k2 = model.k2
    lat = model.lattice
    s, c, d = jacobi_sn_cn_dn(x, k2)
    w = s * s
    scd = s * c * d
    dscd = 1.0 - 2.0 * (1.0 + k2) * w + 3.0 * k2 * w * w

    value = np.asarray(model.m * (model.m - 1) * k2 * w, dtype=complex)
    if model.ell > 1:
        value = value + model.ell * (model.ell - 1) * k2 * (c / d) ** 2
    for alpha2, beta in closed_form_params(model, epsilon, which):
        den = w + alpha2
        small = np.abs(den) < 1e-13
        if np.any(small):
            node = float(x.reshape(-1)[int(np.argmax(small.reshape(-1)))])
            raise SingularTransformationError(
                f"closed-form denominator vanishes at x={node:.12g}", node=node
            )
        h_prime = (dscd * den - 2.0 * scd * (scd - beta)) / (den * den)
        value = value + 2.0 * k2 * w - 2.0 * h_prime
    value = value + model.ell * (model.ell + 1) * (lat.e3 - lat.e1 + 1.0)
    return _real_or_raise(value, "closed-form partner")


def partner_printed_form(x, model: LameModel, epsilon: float, which: int = 1):
    """The printed partner expression, kept for :func:`constant_term_audit`.

    ``-4 k^2 sn^2 x + 2 sum_r (scd +- beta_r)/(sn^2 x + alpha_r^2)
    + 2 {k^2 [N + sum_r alpha_r^2] + N}`` with N auxiliary points.
    """
    x = np.asarray(x, dtype=float)
    k2 = model.k2
    s, c, d = jacobi_sn_cn_dn(x, k2)
    w = s * s
    params = closed_form_params(model, epsilon, which)
    count = len(params)
    value = np.asarray(-4.0 * k2 * w, dtype=complex)
    alpha_sum = 0j
    for alpha2, beta in params:
        value = value + 2.0 * (s * c * d + beta) / (w + alpha2)
        alpha_sum += alpha2
    value = value + 2.0 * (k2 * (count + alpha_sum) + count)
    return _real_or_raise(value, "printed partner")


def constant_term_audit(
    model: LameModel, epsilon: float, which: int = 1, samples: int = 401
) -> tuple[float, float]:
    """Compare the printed partner to the identity route over one period.

    Returns
    -------
    (offset, spread)
        Mean of the difference and its peak-to-peak variation.  A non-zero
        spread means the printed expression differs by more than a constant.
    """
    x = np.linspace(0.0, model.period, samples)
    seed = SeedSpec(epsilon=epsilon, theta=0.0 if which == 1 else math.pi / 2, model=model)
    exact = partner_from_seed(x, seed)
    printed = partner_printed_form(x, model, epsilon, which)
    diff = printed - exact
    offset = float(np.mean(diff))
    spread = float(np.max(diff) - np.min(diff))
    if abs(offset) > AUDIT_TOL or spread > AUDIT_TOL:
        logger.warning(
            "Printed partner for %s at eps=%.6g differs from the exact one: "
            "offset %.6g, non-constant spread %.6g",
            model.label, epsilon, offset, spread,
        )
    return offset, spread


def partner_from_seed(x, seed: SeedSpec):
    """``V~ = 2 (u'/u)^2 - V + 2 eps`` for the seed on *x*.

    Raises
    ------
    SingularTransformationError
        For ``lambda < 0`` (the node is located and reported) or when the
        seed vanishes on *x*.
    """
    validate_seed(seed)
    _reject_nodes(seed, x)
    _, dlog_u = seed_combination(x, seed)
    return 2.0 * dlog_u * dlog_u - potential(np.asarray(x, dtype=float), seed.model) \
        + 2.0 * seed.epsilon


def make_partner(seed: SeedSpec) -> PartnerPotential:
    """Describe the partner generated by *seed*."""
    validate_seed(seed)
    _reject_nodes(seed)
    safe = seed.epsilon <= ground_energy(seed.model) + 1e-12
    if seed.is_bloch:
        params = closed_form_params(seed.model, seed.epsilon, seed.which)
        const = 2.0 * (seed.model.k2 * (len(params) + sum(a for a, _ in params).real)
                       + len(params))
        return PartnerPotential(PartnerKind.PERIODIC_BLOCH, seed, params, const, safe)
    return PartnerPotential(PartnerKind.DEFECT, seed, (), 0.0, safe)


def involution_residual(x, seed: SeedSpec) -> float:
    """Sup relative deviation from V of the partner built on ``phi = 1/u``.

    ``phi'/phi = -u'/u``, so the second transformation gives
    ``2 (phi'/phi)^2 - V~ + 2 eps``, which must reproduce V.
    """
    x = np.asarray(x, dtype=float)
    partner = partner_from_seed(x, seed)
    _, dlog_u = seed_combination(x, seed)
    restored = 2.0 * dlog_u * dlog_u - partner + 2.0 * seed.epsilon
    original = potential(x, seed.model)
    return float(np.max(np.abs(restored - original)) / max(1.0, float(np.max(np.abs(original)))))


# ── Defect bound state ─────────────────────────────────────────────────


def defect_asymptotics(seed: SeedSpec) -> tuple[int, int, float]:
    """Which Bloch function dominates the seed at ``+inf`` and ``-inf``.

    Returns ``(which_plus, which_minus, mu)`` with ``mu = ln|rho1| / 2K``;
    the solution with ``|rho| > 1`` grows to the right.
    """
    sol = bloch_solution(seed.model, seed.epsilon)
    mu = math.log(abs(sol.floquet_multiplier(1))) / seed.model.period
    if mu >= 0.0:
        return 1, 2, mu
    return 2, 1, mu


def _phi_squared(seed: SeedSpec):
    def f(t: float) -> float:
        log_abs = _seed_logs(np.array([t]), seed)[0][0]
        return float(np.exp(-2.0 * log_abs))
    return f


def defect_bound_state(
    seed: SeedSpec,
    x_range: Optional[tuple[float, float]] = None,
    residual_grid: Optional[Sequence[float]] = None,
) -> DefectState:
    """Normalisation, decay and eigen-residual of ``phi = 1/u``.

    The norm is accumulated period by period outward from *x_range* (one
    period around the origin by default) with :func:`scipy.integrate.quad`
    until a period adds less than ``TAIL_RTOL`` of the total.  The decay
    rates are the per-period slopes of ``ln phi`` at the far ends; the
    eigen-residual is measured with finite differences against ``V~``.

    Raises
    ------
    SingularTransformationError
        If the seed is a single Bloch function or has a node.
    NonNormalizableError
        If the tails have not decayed within ``MAX_TAIL_PERIODS`` periods.
    """
    from core.spectral import schrodinger_residual

    validate_seed(seed)
    if seed.is_bloch:
        raise SingularTransformationError(
            "a pure Bloch seed produces a periodic partner without a bound state"
        )
    _reject_nodes(seed)

    period = seed.model.period
    lo, hi = x_range if x_range is not None else (-0.5 * period, 0.5 * period)
    f = _phi_squared(seed)
    total, _ = integrate.quad(f, lo, hi, limit=200, epsrel=1e-12)

    tails = {"left": lo, "right": hi}
    slopes = {}
    for side, edge in tails.items():
        direction = -1.0 if side == "left" else 1.0
        for count in range(1, MAX_TAIL_PERIODS + 1):
            a, b = sorted((edge, edge + direction * period))
            chunk, _ = integrate.quad(f, a, b, limit=200, epsrel=1e-12)
            total += chunk
            edge += direction * period
            if chunk < TAIL_RTOL * total:
                break
        else:
            raise NonNormalizableError(
                f"1/u shows no {side} tail decay within {MAX_TAIL_PERIODS} periods"
            )
        ends = np.array([edge, edge + direction * period])
        log_abs = _seed_logs(ends, seed)[0]
        slopes[side] = float(log_abs[1] - log_abs[0]) / period
        tails[side] = edge

    decay = min(slopes["left"], slopes["right"])
    if not decay > 0.0:
        raise NonNormalizableError(f"1/u is not decaying (rate {decay:.3e})")

    if residual_grid is None:
        residual_grid = np.linspace(lo - period, hi + period, 401)

    def phi(t):
        return np.exp(-_seed_logs(t, seed)[0])

    eigen = schrodinger_residual(
        phi, lambda t: partner_from_seed(t, seed), seed.epsilon, residual_grid,
        period=period,
    )
    logger.info(
        "Defect state at eps=%.6g: |phi|^2 = %.10g, decay %.6g/%.6g, residual %.2e",
        seed.epsilon, total, slopes["left"], slopes["right"], eigen,
    )
    return DefectState(
        epsilon=seed.epsilon,
        norm_squared=float(total),
        decay_rate=decay,
        eigen_residual=eigen,
        decay_left=slopes["left"],
        decay_right=slopes["right"],
    )
