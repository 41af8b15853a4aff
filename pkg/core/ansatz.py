"""Product ansatz for the two Bloch solutions.

The product ``Psi = psi1 psi2`` of two solutions of ``psi'' = U psi``
satisfies the third-order equation

    Psi''' - 4 U Psi' - 2 U' Psi = 0,

and for the solvable pairs it is a short Laurent polynomial in
``p = wp(z) - e1``.  This module holds the published coefficient formulas,
a generic fitter that derives them from the equation for any (m, l) and
power range, the numerator roots that locate the auxiliary points, and a
residual oracle for the third-order equation.
"""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from core.elliptic import wp, wp_prime
from core.errors import UnsupportedModelError
from core.lame import SUPPORTED_MODELS, energy_transform
from core.models import AnsatzBranch, AnsatzCoefficients, LameModel, WeierstrassLattice

logger = logging.getLogger(__name__)

FIT_TOLERANCE = 1e-9
_REAL_ROOT_TOL = 1e-12
_MERGE_TOL = 1e-5
_ZERO_COEFF_TOL = 1e-14
_SNAP_TOL = 1e-12


# ── Published coefficients ─────────────────────────────────────────────


def ansatz_coefficients(model: LameModel, etilde: float) -> AnsatzCoefficients:
    """Closed-form coefficients of the ansatz for *model* at energy *etilde*.

    ===========  =====================================================
    (1,1) (a)    ``p + A1 + A2/p``, A1 = E~ + e1, A2 = ebar2 ebar3
    (1,0) (b)    as (a) with A2 = 0
    (2,1) (c)    ``p^2 + B1 p + B2 + B3/p``, B1 = 2e1 + E~/3,
                 B2 = (E~/3 - e1) B1, B3 = ebar2 ebar3 B1 / 3
    (2,0) (d)    as (c) with B3 = 0 and B2 increased by ebar2 ebar3
    ===========  =====================================================
    """
    lat = model.lattice
    prod = lat.ebar2 * lat.ebar3
    key = (model.m, model.ell)
    if key in ((1, 1), (1, 0)):
        a1 = etilde + lat.e1
        if key == (1, 1):
            return AnsatzCoefficients(AnsatzBranch.A, (a1, prod), -1, 1, etilde)
        return AnsatzCoefficients(AnsatzBranch.B, (a1, 0.0), -1, 1, etilde)
    if key in ((2, 1), (2, 0)):
        b1 = 2.0 * lat.e1 + etilde / 3.0
        b2 = (etilde / 3.0 - lat.e1) * b1
        if key == (2, 1):
            return AnsatzCoefficients(
                AnsatzBranch.C, (b1, b2, prod * b1 / 3.0), -1, 2, etilde
            )
        return AnsatzCoefficients(AnsatzBranch.D, (b1, b2 + prod, 0.0), -1, 2, etilde)
    raise UnsupportedModelError(
        f"no published ansatz for {model.label}; supported pairs are "
        + ", ".join(f"({m},{l})" for m, l in SUPPORTED_MODELS)
    )


def _merge_clusters(roots: np.ndarray, tol: float) -> np.ndarray:
    """Replace every cluster of roots closer than *tol* by its mean.

    A k-fold root of a rounded polynomial splits by about eps^(1/k); the
    cluster mean is accurate to rounding, so band-edge energies get exact
    repeated roots.
    """
    remaining = list(np.asarray(roots, dtype=complex))
    merged = []
    while remaining:
        cluster = [remaining.pop(0)]
        grown = True
        while grown:
            grown = False
            for root in list(remaining):
                if min(abs(root - c) for c in cluster) <= tol:
                    cluster.append(root)
                    remaining.remove(root)
                    grown = True
        mean = complex(np.mean(cluster))
        if len(cluster) > 1:
            logger.debug("Merged %d numerator roots into %s", len(cluster), mean)
        merged.extend([mean] * len(cluster))
    return np.array(merged, dtype=complex)


def _root_polynomial(coeffs: AnsatzCoefficients) -> np.ndarray:
    """Numerator whose roots are the auxiliary wp-values, highest power first.

    On the Lamé branches the ``1/p`` term is absent by construction, so the
    last coefficient is dropped structurally rather than by value; a zero
    root that comes from the energy (``A1 = 0``, ``B1 = 0``) is kept.
    Coefficients below rounding level are set to exactly zero.
    """
    numerator = coeffs.numerator()
    if coeffs.branch in (AnsatzBranch.B, AnsatzBranch.D):
        numerator = numerator[:-1]
    elif coeffs.branch is AnsatzBranch.FITTED:
        numerator = np.trim_zeros(numerator, "b")
    size = float(np.max(np.abs(numerator)))
    return np.where(np.abs(numerator) <= _ZERO_COEFF_TOL * size, 0.0, numerator)


def numerator_roots(coeffs: AnsatzCoefficients, lat: WeierstrassLattice) -> tuple[complex, ...]:
    """Roots of the ansatz numerator, returned as wp-values ``e1 + p``.

    There is one root per auxiliary point, zero roots included.  Clusters
    left by repeated roots are merged, and roots at a half-period value
    ``p = e_i - e1`` are snapped onto it.  Real roots come first by
    decreasing ``p``, then complex roots with positive imaginary part
    before their conjugates.
    """
    numerator = _root_polynomial(coeffs)
    p_roots = np.roots(numerator)
    scale = max(1.0, float(np.max(np.abs(p_roots)))) if p_roots.size else 1.0
    p_roots = _merge_clusters(p_roots, _MERGE_TOL * scale)
    for e in lat.branch_values:
        near = np.abs(p_roots - (e - lat.e1)) <= _SNAP_TOL * scale
        p_roots[near] = e - lat.e1

    real, complex_ = [], []
    for root in p_roots:
        if abs(root.imag) <= _REAL_ROOT_TOL * scale:
            real.append(float(root.real))
        else:
            complex_.append(complex(root))
    real.sort(reverse=True)
    complex_.sort(key=lambda c: (-c.imag, c.real))
    ordered = [complex(lat.e1 + r) for r in real] + [lat.e1 + c for c in complex_]
    logger.debug("Numerator roots (wp values): %s", ordered)
    return tuple(ordered)


# ── Third-order equation ───────────────────────────────────────────────


def _laurent_derivatives(c: np.ndarray, r_min: int, p: np.ndarray):
    """Psi and its first three p-derivatives for ``Psi = sum C_r p^r``."""
    psi = np.zeros_like(p)
    d1 = np.zeros_like(p)
    d2 = np.zeros_like(p)
    d3 = np.zeros_like(p)
    for offset, cr in enumerate(c):
        r = r_min + offset
        psi = psi + cr * p ** r
        d1 = d1 + cr * r * p ** (r - 1)
        d2 = d2 + cr * r * (r - 1) * p ** (r - 2)
        d3 = d3 + cr * r * (r - 1) * (r - 2) * p ** (r - 3)
    return psi, d1, d2, d3


def _product_residual(
    m: int,
    ell: int,
    lat: WeierstrassLattice,
    etilde: float,
    coeffs: AnsatzCoefficients,
    samples: np.ndarray,
) -> float:
    z = np.asarray(samples, dtype=complex)
    wpz = np.asarray(wp(z, lat))
    wp1 = np.asarray(wp_prime(z, lat))
    wp2 = 6.0 * wpz * wpz - lat.g2 / 2.0
    wp3 = 12.0 * wpz * wp1
    p = wpz - lat.e1

    psi, d1, d2, d3 = _laurent_derivatives(coeffs.laurent(), coeffs.r_min, p)
    dpsi = d1 * wp1
    dpsi3 = d3 * wp1 ** 3 + 3.0 * d2 * wp1 * wp2 + d1 * wp3

    big_m = m * (m + 1)
    big_l = ell * (ell + 1)
    prod = lat.ebar2 * lat.ebar3
    u = big_m * wpz + big_l * prod / p - etilde
    du = wp1 * (big_m - big_l * prod / (p * p))

    residual = dpsi3 - 4.0 * u * dpsi - 2.0 * du * psi
    scale = np.abs(dpsi3) + 4.0 * np.abs(u * dpsi) + 2.0 * np.abs(du * psi)
    return float(np.max(np.abs(residual) / scale))


def probe_points(lat: WeierstrassLattice, count: int = 24) -> np.ndarray:
    """Generic complex sample points spread over one period cell."""
    j = np.arange(count)
    re = lat.omega * (2.0 * ((0.1372 + 0.6180339887 * j) % 1.0) - 1.0)
    im = lat.omegap.imag * (0.9 * ((0.3711 + 0.4142135624 * j) % 1.0) - 0.95)
    return re + 1j * im


def product_ode_residual(
    model: LameModel,
    energy: float,
    samples: Optional[Sequence[complex]] = None,
    coeffs: Optional[AnsatzCoefficients] = None,
) -> float:
    """Sup relative residual of the third-order equation for the ansatz.

    Derivatives of ``Psi(wp(z))`` use the chain rule with the analytic
    ``wp'``, ``wp'' = 6 wp^2 - g2/2`` and ``wp''' = 12 wp wp'``.
    *coeffs* defaults to :func:`ansatz_coefficients` at *energy*.
    """
    etilde = energy_transform(energy, model).Etilde
    if coeffs is None:
        coeffs = ansatz_coefficients(model, etilde)
    if samples is None:
        samples = probe_points(model.lattice)
    return _product_residual(model.m, model.ell, model.lattice, etilde, coeffs, samples)


# ── Generic fitter ─────────────────────────────────────────────────────


def _recursion_terms(m: int, ell: int, lat: WeierstrassLattice, etilde: float):
    big_m = m * (m + 1)
    big_l = ell * (ell + 1)
    s = 3.0 * lat.e1
    prod = lat.ebar2 * lat.ebar3

    def a(r: int) -> float:
        return 2.0 * (2 * r + 1) * (r * (r + 1) - big_m)

    def b(r: int) -> float:
        return 4.0 * r * (s * (r * r - 1) + (3 - big_m) * lat.e1 + etilde)

    def c(r: int) -> float:
        return 2.0 * prod * (2 * r - 1) * (r * (r - 1) - big_l)

    return a, b, c


def fit_ansatz(
    m: int,
    ell: int,
    lat: WeierstrassLattice,
    etilde: float,
    r_min: int,
    r_max: int,
    tol: float = FIT_TOLERANCE,
) -> Optional[AnsatzCoefficients]:
    """Fit ``Psi = sum_{r=r_min}^{r_max} C_r p^r`` to the third-order equation.

    Substituting the ansatz and reducing with
    ``wp'^2 = 4 p (p + ebar2)(p + ebar3)`` and ``wp'' = 6p^2 + 4sp + 2 ebar2 ebar3``
    (``s = 3 e1``) leaves, for every power of p, the three-term relation

        a_j C_j + b_{j+1} C_{j+1} + c_{j+2} C_{j+2} = 0.

    The homogeneous system is solved through its SVD null space and made
    monic (``C_{r_max} = 1``).

    Returns
    -------
    AnsatzCoefficients or None
        ``None`` when the system has no non-trivial solution (the smallest
        singular value is not negligible) or the solution is not monic-able.
    """
    if not r_min <= 0 <= r_max:
        raise ValueError(f"power range must contain 0, got [{r_min}, {r_max}]")

    a, b, c = _recursion_terms(m, ell, lat, etilde)
    size = r_max - r_min + 1
    rows = []
    for j in range(r_min - 2, r_max + 1):
        row = np.zeros(size)
        for r, coef in ((j, a(j)), (j + 1, b(j + 1)), (j + 2, c(j + 2))):
            if r_min <= r <= r_max:
                row[r - r_min] += coef
        if np.any(row):
            rows.append(row)
    matrix = np.array(rows)

    _, sing, vt = linalg.svd(matrix)
    if sing.size < size:
        sing = np.concatenate([sing, np.zeros(size - sing.size)])
    ratio = sing[-1] / sing[0] if sing[0] > 0 else 0.0
    logger.debug(
        "fit_ansatz (%d,%d) r=[%d,%d]: singular values %s", m, ell, r_min, r_max, sing
    )
    if ratio > tol:
        logger.info(
            "Ansatz (%d,%d) over [%d,%d] infeasible (sigma_min/sigma_max=%.3e)",
            m, ell, r_min, r_max, ratio,
        )
        return None
    if size > 1 and sing[-2] / sing[0] <= tol:
        logger.warning(
            "Ansatz (%d,%d) over [%d,%d] has a multi-dimensional solution space",
            m, ell, r_min, r_max,
        )

    null = vt[-1]
    lead = null[-1]
    if abs(lead) < tol * float(np.max(np.abs(null))):
        logger.info("Ansatz (%d,%d) solution has a vanishing leading coefficient", m, ell)
        return None
    c_r = null / lead
    coeffs = tuple(float(v) for v in reversed(c_r[:-1]))
    return AnsatzCoefficients(AnsatzBranch.FITTED, coeffs, r_min, r_max, etilde)


def fitted_residual(
    m: int,
    ell: int,
    lat: WeierstrassLattice,
    coeffs: AnsatzCoefficients,
    samples: Optional[Sequence[complex]] = None,
) -> float:
    """Third-order residual for a fitted ansatz of an arbitrary pair (m, l)."""
    if samples is None:
        samples = probe_points(lat)
    return _product_residual(m, ell, lat, coeffs.etilde, coeffs, samples)
