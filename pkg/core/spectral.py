"""Floquet/Hill verification of periodic Schrödinger operators.

Nothing here knows about elliptic functions: every routine takes a plain
potential sampler ``V(x)`` and integrates ``-psi'' + V psi = E psi`` over one
period with :func:`scipy.integrate.solve_ivp` (DOP853).  Energies are
integrated as one vectorised batch, so the potential is evaluated once per
step for the whole grid.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from core.errors import DomainError, IntegratorError
from core.models import BandStructure, MonodromyResult, SpectralClass

logger = logging.getLogger(__name__)

Sampler = Callable[[float], float]

MONODROMY_RTOL = 1e-11
MONODROMY_ATOL = 1e-13
EDGE_TOL = 1e-7
EDGE_XTOL = 1e-12
RICHARDSON_STEP = 1e-2
RICHARDSON_LEVELS = 3


# ── Monodromy ──────────────────────────────────────────────────────────


def classify(discriminant: float, tol: float = EDGE_TOL) -> SpectralClass:
    excess = abs(discriminant) - 2.0
    if excess > tol:
        return SpectralClass.GAP
    if excess < -tol:
        return SpectralClass.BAND
    return SpectralClass.EDGE


def _integrate(
    sampler: Sampler,
    period: float,
    energies: np.ndarray,
    x0: float,
    rtol: float,
    atol: float,
) -> np.ndarray:
    count = energies.size
    y0 = np.tile([1.0, 0.0, 0.0, 1.0], count)

    def rhs(x: float, y: np.ndarray) -> np.ndarray:
        shifted = float(sampler(x)) - energies
        state = y.reshape(count, 4)
        out = np.empty_like(state)
        out[:, 0] = state[:, 1]
        out[:, 1] = shifted * state[:, 0]
        out[:, 2] = state[:, 3]
        out[:, 3] = shifted * state[:, 2]
        return out.ravel()

    end = x0 + period
    sol = integrate.solve_ivp(
        rhs, (x0, end), y0, method="DOP853", rtol=rtol, atol=atol, t_eval=[end]
    )
    if not sol.success:
        raise IntegratorError(f"monodromy integration failed: {sol.message}")
    final = sol.y[:, -1].reshape(count, 4)
    if not np.all(np.isfinite(final)):
        raise IntegratorError("monodromy integration produced non-finite values")
    logger.debug("Integrated %d energies over [%.6g, %.6g] in %d RHS calls",
                 count, x0, end, sol.nfev)
    return final


def monodromy_batch(
    sampler: Sampler,
    period: float,
    energies: Sequence[float],
    x0: float = 0.0,
    rtol: float = MONODROMY_RTOL,
    atol: float = MONODROMY_ATOL,
    edge_tol: float = EDGE_TOL,
) -> list[MonodromyResult]:
    """Transfer matrices over one period for every energy in *energies*.

    The columns of the matrix are the solutions started from
    ``(psi, psi') = (1, 0)`` and ``(0, 1)`` at *x0*.

    Raises
    ------
    IntegratorError
        If :func:`scipy.integrate.solve_ivp` fails or returns non-finite values.
    """
    e = np.atleast_1d(np.asarray(energies, dtype=float))
    final = _integrate(sampler, period, e, x0, rtol, atol)
    results = []
    for energy, (m11, m21, m12, m22) in zip(e, final):
        d = m11 + m22
        results.append(MonodromyResult(
            energy=float(energy), m11=float(m11), m12=float(m12),
            m21=float(m21), m22=float(m22), classification=classify(d, edge_tol),
        ))
    return results


def integrate_monodromy(sampler: Sampler, period: float, energy: float,
                        **kwargs) -> MonodromyResult:
    return monodromy_batch(sampler, period, [energy], **kwargs)[0]


def hill_discriminant(sampler: Sampler, period: float, energy, **kwargs):
    """Trace of the monodromy matrix; scalar in, scalar out."""
    e = np.asarray(energy, dtype=float)
    values = np.array([r.discriminant for r in monodromy_batch(sampler, period, e, **kwargs)])
    return float(values[0]) if e.ndim == 0 else values


def floquet_exponent(discriminant: float, period: float) -> float:
    """``|Re mu| = arccosh(|D|/2) / period``; zero inside bands."""
    if abs(discriminant) <= 2.0:
        return 0.0
    return math.acosh(abs(discriminant) / 2.0) / period


def assert_period(sampler: Sampler, period: float, probes: int = 7, tol: float = 1e-10) -> None:
    """Raise :class:`DomainError` unless ``V(x + period) == V(x)`` at probe points."""
    xs = period * (0.0917 + 0.1377 * np.arange(probes))
    for x in xs:
        a, b = float(sampler(x)), float(sampler(x + period))
        if abs(a - b) > tol * max(1.0, abs(a)):
            raise DomainError(
                f"potential is not {period:.12g}-periodic: V({x:.6g})={a!r}, "
                f"V({x + period:.6g})={b!r}"
            )


# ── Band structure ─────────────────────────────────────────────────────


def locate_edge(sampler: Sampler, period: float, lo: float, hi: float,
                xtol: float = EDGE_XTOL) -> float:
    """Energy in ``[lo, hi]`` where ``|D(E)| = 2``, by Brent's method."""
    def excess(e: float) -> float:
        return abs(hill_discriminant(sampler, period, e)) - 2.0

    return float(optimize.brentq(excess, lo, hi, xtol=xtol))


def band_structure(
    sampler: Sampler,
    period: float,
    e_grid: Sequence[float],
    edge_tol: float = EDGE_TOL,
) -> BandStructure:
    """Band edges and intervals from sign changes of ``|D| - 2`` on *e_grid*.

    Sign changes between neighbouring grid points are refined with
    :func:`locate_edge`.  A positive local minimum of ``|D| - 2`` is searched
    for a band thinner than the grid spacing; a minimum that only touches
    zero is a closed gap and produces no edge.  Gaps whose interior never
    exceeds ``edge_tol`` are merged away for the same reason.
    """
    e = np.sort(np.asarray(e_grid, dtype=float))
    excess = np.abs(hill_discriminant(sampler, period, e)) - 2.0
    if excess[0] <= 0.0:
        logger.warning("Energy grid starts at %.6g, inside a band; lowest edge may be missing", e[0])

    def f(energy: float) -> float:
        return abs(hill_discriminant(sampler, period, energy)) - 2.0

    edges: list[float] = []
    unresolved: list[tuple[float, float]] = []
    for i in range(e.size - 1):
        if excess[i] == 0.0:
            edges.append(float(e[i]))
        elif excess[i] * excess[i + 1] < 0.0:
            try:
                edges.append(locate_edge(sampler, period, e[i], e[i + 1]))
            except ValueError:
                logger.warning("Could not bracket edge in [%.8g, %.8g]", e[i], e[i + 1])
                unresolved.append((float(e[i]), float(e[i + 1])))

    for i in range(1, e.size - 1):
        if not (excess[i] > 0.0 and excess[i] <= excess[i - 1] and excess[i] <= excess[i + 1]):
            continue
        res = optimize.minimize_scalar(f, bounds=(e[i - 1], e[i + 1]), method="bounded",
                                       options={"xatol": 1e-12})
        if res.fun >= -edge_tol:
            continue
        logger.warning(
            "Two band edges fall inside one grid cell near E=%.8g; refining", res.x
        )
        try:
            edges.append(locate_edge(sampler, period, e[i - 1], res.x))
            edges.append(locate_edge(sampler, period, res.x, e[i + 1]))
        except ValueError:
            unresolved.append((float(e[i - 1]), float(e[i + 1])))

    edges = sorted(set(edges))
    edges = _merge_closed_gaps(edges, f, edge_tol)

    bands = [(edges[i], edges[i + 1]) for i in range(0, len(edges) - 1, 2)]
    if len(edges) % 2 == 1:
        bands.append((edges[-1], math.inf))
    gaps = [(edges[i], edges[i + 1]) for i in range(1, len(edges) - 1, 2)]
    logger.info("Band structure: %d edges, %d finite bands, %d finite gaps",
                len(edges), sum(1 for b in bands if math.isfinite(b[1])), len(gaps))
    return BandStructure(edges=edges, bands=bands, gaps=gaps, unresolved=unresolved)


def _merge_closed_gaps(edges: list[float], f: Callable[[float], float],
                       edge_tol: float) -> list[float]:
    kept = list(edges)
    i = 1
    while i < len(kept) - 1:
        lo, hi = kept[i], kept[i + 1]
        if f(0.5 * (lo + hi)) < edge_tol:
            logger.debug("Dropping closed gap [%.10g, %.10g]", lo, hi)
            del kept[i:i + 2]
        else:
            i += 2
    return kept


def isospectral_compare(
    sampler_a: Sampler,
    sampler_b: Sampler,
    period: float,
    e_grid: Sequence[float],
) -> float:
    """``max |D_A - D_B|`` over *e_grid*, absolute."""
    d_a = np.atleast_1d(hill_discriminant(sampler_a, period, np.asarray(e_grid, dtype=float)))
    d_b = np.atleast_1d(hill_discriminant(sampler_b, period, np.asarray(e_grid, dtype=float)))
    return float(np.max(np.abs(d_a - d_b)))


# ── Residuals ──────────────────────────────────────────────────────────


def _second_difference(f, x: np.ndarray, h: float) -> np.ndarray:
    return (np.asarray(f(x + h)) - 2.0 * np.asarray(f(x)) + np.asarray(f(x - h))) / (h * h)


def richardson_second_derivative(f, x, h: float, levels: int = RICHARDSON_LEVELS) -> np.ndarray:
    """Central second differences at ``h, h/2, ...`` combined by Richardson extrapolation."""
    x = np.asarray(x, dtype=float)
    table = [_second_difference(f, x, h / 2 ** j) for j in range(levels + 1)]
    for level in range(1, levels + 1):
        factor = 4.0 ** level
        table = [(factor * table[j + 1] - table[j]) / (factor - 1.0)
                 for j in range(len(table) - 1)]
    return table[0]


def schrodinger_residual(
    psi_sampler,
    potential_sampler,
    energy: float,
    x_grid: Sequence[float],
    second_derivative=None,
    period: Optional[float] = None,
    levels: int = RICHARDSON_LEVELS,
) -> float:
    """``sup |-psi'' + V psi - E psi| / sup |E psi|`` over *x_grid*.

    ``psi''`` comes from *second_derivative* when given, otherwise from
    Richardson-extrapolated differences with step ``1e-2 * period`` (the
    grid span when *period* is omitted).  For ``E = 0`` the denominator is
    ``sup |psi|``.
    """
    x = np.asarray(x_grid, dtype=float)
    psi = np.asarray(psi_sampler(x))
    if second_derivative is not None:
        d2 = np.asarray(second_derivative(x))
    else:
        span = period if period else float(x.max() - x.min())
        d2 = richardson_second_derivative(psi_sampler, x, RICHARDSON_STEP * span, levels)
    residual = -d2 + (np.asarray(potential_sampler(x)) - energy) * psi
    scale = abs(energy) if energy != 0.0 else 1.0
    return float(np.max(np.abs(residual)) / (scale * np.max(np.abs(psi))))
