"""Jacobi and Weierstrass elliptic functions for a real modulus.

All Weierstrass quantities live on the lattice normalised by
``e1 - e3 = 1`` and ``e1 + e2 + e3 = 0``, so that the half-periods are
``omega = K`` and ``omega' = iK'`` and the Jacobi and Weierstrass pictures
share the same argument.  Two independent routes are provided for wp:

* the Jacobi route, ``wp(z) = e3 + 1/sn^2(z) = e3 + k^2 sn^2(z - iK')``,
  built on :func:`scipy.special.ellipj` and the addition theorem for
  complex arguments;
* the theta route, from Jacobi theta series in the nome
  ``q = exp(-pi K'/K)``, which also yields sigma and zeta.

Every function accepts a scalar or an array and returns the same shape.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from scipy import special

from core.errors import ConvergenceError, DomainError, PoleProximityError
from core.models import ModulusParams, WeierstrassLattice

logger = logging.getLogger(__name__)

# ── Constants ──────────────────────────────────────────────────────────

DEFAULT_POLE_GUARD = 1e-8
INVERSE_WP_TOL = 1e-11
INVERSE_WP_MAX_ITER = 12

# A theta-series term is dropped once its magnitude bound falls below
# exp(-_SERIES_LOG_CUTOFF) relative to the leading term.
_SERIES_LOG_CUTOFF = 39.2
_EXTRA_TERMS = 3


# ── Helpers ────────────────────────────────────────────────────────────


def _check_modulus(k2: float) -> None:
    if not (isinstance(k2, (int, float, np.floating)) and math.isfinite(k2)):
        raise DomainError(f"k2 must be a finite real number, got {k2!r}")
    if not 0.0 < k2 < 1.0:
        raise DomainError(f"k2 must lie in the open interval (0, 1), got {k2}")


def _as_complex(z) -> tuple[np.ndarray, bool]:
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _unwrap(value: np.ndarray, scalar: bool):
    if scalar:
        return value.item() if isinstance(value, np.ndarray) else value
    return value


def _distance_to_lattice(
    z: np.ndarray, half_re: float, half_im: float, shift: complex = 0j
) -> np.ndarray:
    """Distance from *z* to the rectangular lattice ``shift + 2m half_re + 2n i half_im``."""
    w = z - shift
    m = np.rint(w.real / (2.0 * half_re))
    n = np.rint(w.imag / (2.0 * half_im))
    return np.abs(w - 2.0 * m * half_re - 2j * n * half_im)


def _guard_poles(distance: np.ndarray, guard: Optional[float], what: str) -> None:
    if guard is None or guard <= 0.0:
        return
    closest = float(np.min(distance)) if distance.size else math.inf
    if closest < guard:
        raise PoleProximityError(
            f"{what}: argument within {closest:.3e} of a pole "
            f"(guard radius {guard:.1e})",
            closest,
        )


# ── Moduli and complete integrals ─────────────────────────────────────


def complete_elliptic_integrals(k2: float) -> tuple[float, float]:
    """Return ``(K, K')`` for the squared modulus *k2*.

    ``K' = K(1 - k2)`` is taken from :func:`scipy.special.ellipkm1` so it
    keeps full relative accuracy when *k2* is close to 1.

    Raises
    ------
    DomainError
        If *k2* is not in (0, 1).
    """
    _check_modulus(k2)
    return float(special.ellipk(k2)), float(special.ellipkm1(k2))


def modulus_params(k2: float) -> ModulusParams:
    """Build the validated :class:`ModulusParams` for *k2*."""
    big_k, big_kc = complete_elliptic_integrals(k2)
    return ModulusParams(k2=float(k2), k2c=1.0 - float(k2),
                         big_k=big_k, big_kc=big_kc)


# ── Jacobi functions ───────────────────────────────────────────────────


def jacobi_sn_cn_dn(x, k2: float):
    """Real-argument ``(sn, cn, dn)`` from the AGM-based :func:`scipy.special.ellipj`."""
    _check_modulus(k2)
    sn, cn, dn, _ = special.ellipj(x, k2)
    return sn, cn, dn


def jacobi_complex(z, k2: float, guard: Optional[float] = DEFAULT_POLE_GUARD):
    """Complex-argument ``(sn, cn, dn)`` by the addition theorem.

    For ``z = u + iv`` the real functions of ``u`` with modulus k and of
    ``v`` with the complementary modulus k' are combined, which avoids any
    complex AGM.  The three functions share their poles, congruent to
    ``iK'`` modulo ``(2K, 2iK')``.

    Raises
    ------
    PoleProximityError
        If some argument is closer than *guard* to a pole.
    """
    _check_modulus(k2)
    zc, scalar = _as_complex(z)
    big_k, big_kc = complete_elliptic_integrals(k2)
    _guard_poles(
        _distance_to_lattice(zc, big_k, big_kc, shift=1j * big_kc),
        guard,
        "jacobi_complex",
    )

    s, c, d, _ = special.ellipj(zc.real, k2)
    s1, c1, d1, _ = special.ellipj(zc.imag, 1.0 - k2)
    den = c1 * c1 + k2 * s * s * s1 * s1
    with np.errstate(divide="ignore", invalid="ignore"):
        sn = (s * d1 + 1j * c * d * s1 * c1) / den
        cn = (c * c1 - 1j * s * d * s1 * d1) / den
        dn = (d * c1 * d1 - 1j * k2 * s * c * s1) / den
    return _unwrap(sn, scalar), _unwrap(cn, scalar), _unwrap(dn, scalar)


# ── Lattice ────────────────────────────────────────────────────────────


def lattice_from_modulus(k2: float) -> WeierstrassLattice:
    """Weierstrass lattice with ``e1 - e3 = 1``, ``omega = K``, ``omega' = iK'``.

    The theta constants needed by sigma, zeta and the theta route of wp
    are evaluated once here; eta comes from ``theta1'''(0)/theta1'(0)`` and
    eta' from the Legendre relation.
    """
    params = modulus_params(k2)
    big_k, big_kc = params.big_k, params.big_kc

    e1 = (2.0 - k2) / 3.0
    e2 = (2.0 * k2 - 1.0) / 3.0
    e3 = -(1.0 + k2) / 3.0
    g2 = 2.0 * (e1 * e1 + e2 * e2 + e3 * e3)
    g3 = 4.0 * e1 * e2 * e3

    ratio = math.pi * big_kc / big_k
    n_terms = int(math.ceil(math.sqrt(_SERIES_LOG_CUTOFF / ratio + 0.25))) + _EXTRA_TERMS
    n = np.arange(n_terms)
    odd = 2.0 * n + 1.0
    qpow = np.exp(-ratio * (n + 0.5) ** 2)
    sign = (-1.0) ** n
    theta1p0 = float(2.0 * np.sum(sign * qpow * odd))
    theta1ppp0 = float(-2.0 * np.sum(sign * qpow * odd ** 3))
    theta2_0 = float(2.0 * np.sum(qpow))

    omega = big_k
    omegap = 1j * big_kc
    eta = -math.pi ** 2 * theta1ppp0 / (12.0 * omega * theta1p0)
    etap = (eta * omegap - 0.5j * math.pi) / omega

    logger.debug(
        "Lattice for k2=%.6g: q=%.3e, %d theta terms, eta=%.15g",
        k2, math.exp(-ratio), n_terms, eta,
    )
    return WeierstrassLattice(
        k2=float(k2), omega=omega, omegap=omegap,
        e1=e1, e2=e2, e3=e3, g2=g2, g3=g3,
        eta=eta, etap=etap, ebar2=e1 - e2, ebar3=e1 - e3,
        nome=math.exp(-ratio), n_terms=n_terms,
        theta1p0=theta1p0, theta1ppp0=theta1ppp0, theta2_0=theta2_0,
    )


def half_period(index: int, lat: WeierstrassLattice) -> complex:
    """Return omega_1, omega_2 or omega_3."""
    try:
        return {1: lat.omega1, 2: lat.omega2, 3: lat.omega3}[index]
    except KeyError:
        raise DomainError(f"half-period index must be 1, 2 or 3, got {index}") from None


def reduce_to_cell(z, lat: WeierstrassLattice, centered: bool = True):
    """Split ``z = z_red + 2m omega + 2n omega'``.

    With *centered* the reduced point satisfies ``|Re| <= omega`` and
    ``|Im| <= K'``; otherwise it lies in ``[0, 2 omega) x [0, 2K')``.
    Returns ``(z_red, m, n)``.
    """
    zc, scalar = _as_complex(z)
    two_w = 2.0 * lat.omega
    two_wp = 2.0 * lat.omegap.imag
    rounding = np.rint if centered else np.floor
    n = rounding(zc.imag / two_wp)
    z1 = zc - 1j * n * two_wp
    m = rounding(z1.real / two_w)
    zr = z1 - m * two_w
    return _unwrap(zr, scalar), _unwrap(m, scalar), _unwrap(n, scalar)


# ── Theta series ───────────────────────────────────────────────────────


def _series(lat: WeierstrassLattice):
    n = np.arange(lat.n_terms)
    ratio = math.pi * lat.omegap.imag / lat.omega
    return 2.0 * n + 1.0, np.exp(-ratio * (n + 0.5) ** 2), (-1.0) ** n


def _theta1(v: np.ndarray, lat: WeierstrassLattice) -> np.ndarray:
    odd, qpow, sign = _series(lat)
    return 2.0 * np.sum(sign * qpow * np.sin(odd * v[..., None]), axis=-1)


def _theta1_prime(v: np.ndarray, lat: WeierstrassLattice) -> np.ndarray:
    odd, qpow, sign = _series(lat)
    return 2.0 * np.sum(sign * qpow * odd * np.cos(odd * v[..., None]), axis=-1)


def _theta2(v: np.ndarray, lat: WeierstrassLattice) -> np.ndarray:
    _, qpow, _ = _series(lat)
    odd = 2.0 * np.arange(lat.n_terms) + 1.0
    return 2.0 * np.sum(qpow * np.cos(odd * v[..., None]), axis=-1)


# ── Weierstrass functions ──────────────────────────────────────────────


def wp(z, lat: WeierstrassLattice, route: str = "jacobi",
       guard: Optional[float] = DEFAULT_POLE_GUARD):
    """Weierstrass wp(z) on *lat*.

    Parameters
    ----------
    z:
        Complex scalar or array, away from the period lattice.
    route:
        ``"jacobi"`` (default) evaluates ``e3 + k^2 sn^2(z - iK')``, which is
        ``e3 + 1/sn^2(z)`` without the removable singularities at the sn
        poles; ``"theta"`` uses the theta quotient
        ``e1 + (pi/2w)^2 (theta1'(0) theta2(v) / (theta2(0) theta1(v)))^2``.

    Raises
    ------
    PoleProximityError
        If *z* is within *guard* of a lattice point.
    """
    zc, scalar = _as_complex(z)
    _guard_poles(
        _distance_to_lattice(zc, lat.omega, lat.omegap.imag), guard, "wp"
    )
    if route == "jacobi":
        sn, _, _ = jacobi_complex(zc - lat.omegap, lat.k2, guard=None)
        value = lat.e3 + lat.k2 * sn * sn
    elif route == "theta":
        zr, _, _ = reduce_to_cell(zc, lat)
        v = np.asarray(math.pi * zr / (2.0 * lat.omega))
        ratio = lat.theta1p0 * _theta2(v, lat) / (lat.theta2_0 * _theta1(v, lat))
        value = lat.e1 + (math.pi / (2.0 * lat.omega)) ** 2 * ratio * ratio
    else:
        raise DomainError(f"unknown wp route '{route}'")
    return _unwrap(value, scalar)


def wp_prime(z, lat: WeierstrassLattice,
             guard: Optional[float] = DEFAULT_POLE_GUARD):
    """wp'(z) = 2 k^2 sn cn dn evaluated at ``z - iK'``."""
    zc, scalar = _as_complex(z)
    _guard_poles(
        _distance_to_lattice(zc, lat.omega, lat.omegap.imag), guard, "wp_prime"
    )
    sn, cn, dn = jacobi_complex(zc - lat.omegap, lat.k2, guard=None)
    return _unwrap(2.0 * lat.k2 * sn * cn * dn, scalar)


def log_sigma(z, lat: WeierstrassLattice, reduce: bool = True):
    """Logarithm of sigma(z), exact under lattice translations.

    The branch of the imaginary part is arbitrary; only ``exp`` of sums
    of these values is meaningful.  Returns ``-inf`` on lattice points.
    With ``reduce=False`` the theta formula is applied to *z* directly,
    which is accurate for ``|Im z| <= 3K'`` and lets callers test the
    quasi-periodicity independently of the reduction.
    """
    zc, scalar = _as_complex(z)
    if reduce:
        zr, m, n = reduce_to_cell(zc, lat)
    else:
        zr, m, n = zc, 0.0, 0.0
    zr = np.asarray(zr)
    v = math.pi * zr / (2.0 * lat.omega)
    with np.errstate(divide="ignore"):
        base = (
            math.log(2.0 * lat.omega / math.pi)
            + lat.eta * zr * zr / (2.0 * lat.omega)
            + np.log(_theta1(v, lat) / lat.theta1p0)
        )
    shift = 2.0 * m * lat.eta + 2.0 * n * lat.etap
    value = base + 1j * math.pi * (m + n + m * n) + shift * (zr + m * lat.omega + n * lat.omegap)
    return _unwrap(value, scalar)


def sigma_ratio(z, w, lat: WeierstrassLattice):
    """``sigma(z + w) / sigma(z)``, free of the branch jumps of :func:`log_sigma`."""
    zc, scalar = _as_complex(z)
    with np.errstate(over="ignore", invalid="ignore"):
        value = np.exp(np.asarray(log_sigma(zc + w, lat)) - np.asarray(log_sigma(zc, lat)))
    return _unwrap(value, scalar)


def weier_sigma(z, lat: WeierstrassLattice):
    """Weierstrass sigma(z); entire and odd, ``sigma(z)/z -> 1`` at 0."""
    with np.errstate(over="ignore", invalid="ignore"):
        value = np.exp(np.asarray(log_sigma(z, lat)))
    _, scalar = _as_complex(z)
    return _unwrap(value, scalar)


def weier_zeta(z, lat: WeierstrassLattice,
               guard: Optional[float] = DEFAULT_POLE_GUARD, reduce: bool = True):
    """Weierstrass zeta(z) with ``zeta(z + 2m w + 2n w') = zeta(z) + 2m eta + 2n eta'``."""
    zc, scalar = _as_complex(z)
    _guard_poles(
        _distance_to_lattice(zc, lat.omega, lat.omegap.imag), guard, "weier_zeta"
    )
    if reduce:
        zr, m, n = reduce_to_cell(zc, lat)
    else:
        zr, m, n = zc, 0.0, 0.0
    zr = np.asarray(zr)
    v = math.pi * zr / (2.0 * lat.omega)
    value = (
        lat.eta * zr / lat.omega
        + (math.pi / (2.0 * lat.omega)) * _theta1_prime(v, lat) / _theta1(v, lat)
        + 2.0 * m * lat.eta + 2.0 * n * lat.etap
    )
    return _unwrap(value, scalar)


# ── Inversion of wp ────────────────────────────────────────────────────


def _imaginary_axis_preimage(c: float, lat: WeierstrassLattice) -> complex:
    """``t = iy`` with ``wp(t) = c`` for real ``c < e3`` (``0 < y < K'``)."""
    sn2 = 1.0 / (1.0 + lat.e3 - c)
    y = special.ellipkinc(math.asin(math.sqrt(sn2)), 1.0 - lat.k2)
    return 1j * float(y)


def _real_axis_preimage(c: float, lat: WeierstrassLattice) -> complex:
    """``t`` in ``(0, omega)`` with ``wp(t) = c`` for real ``c > e1``."""
    return complex(special.elliprf(c - lat.e1, c - lat.e2, c - lat.e3))


def _initial_preimage(c: complex, lat: WeierstrassLattice) -> complex:
    scale = max(1.0, abs(c))
    if abs(c.imag) > 1e-15 * scale:
        # Straight ray from c to +infinity never meets the cut for non-real c.
        return complex(special.elliprf(c - lat.e1, c - lat.e2, c - lat.e3))

    x = c.real
    e1, e2, e3 = lat.e1, lat.e2, lat.e3
    if x > e1:
        return _real_axis_preimage(x, lat)
    if x < e3:
        return _imaginary_axis_preimage(x, lat)
    if x < e2:
        # wp(t + w3) = e3 + (e3 - e1)(e3 - e2)/(wp(t) - e3) maps (e3, e2) above e1
        shifted = e3 + (e3 - e1) * (e3 - e2) / (x - e3)
        return _real_axis_preimage(shifted, lat) + lat.omega3
    # wp(t + w1) = e1 + (e1 - e2)(e1 - e3)/(wp(t) - e1) maps (e2, e1) below e3
    shifted = e1 + (e1 - e2) * (e1 - e3) / (x - e1)
    return _imaginary_axis_preimage(shifted, lat) + lat.omega1


def _to_fundamental(t: complex, lat: WeierstrassLattice) -> complex:
    zr, _, _ = reduce_to_cell(t, lat, centered=False)
    return complex(zr)


def inverse_wp(c, lat: WeierstrassLattice, tol: float = INVERSE_WP_TOL,
               max_iter: int = INVERSE_WP_MAX_ITER) -> complex:
    """Solve ``wp(t) = c`` for *t* in ``[0, 2 omega) x [0, 2K')``.

    The starting value is the Carlson integral
    ``R_F(c - e1, c - e2, c - e3)`` (or its real-line counterparts obtained
    through the half-period shifts, so no branch cut is ever crossed); a
    few complex Newton steps on ``wp(t) - c`` restore full precision.

    Raises
    ------
    DomainError
        If *c* is not finite.
    ConvergenceError
        If the Newton polish does not bring ``|wp(t) - c|`` below *tol*.
    """
    c = complex(c)
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise DomainError(f"inverse_wp needs a finite value, got {c}")

    scale = max(1.0, abs(c))
    for index, e in ((1, lat.e1), (2, lat.e2), (3, lat.e3)):
        if abs(c - e) <= 1e-15 * scale:
            return _to_fundamental(half_period(index, lat), lat)

    t = _initial_preimage(c, lat)
    if not (math.isfinite(t.real) and math.isfinite(t.imag)):
        raise ConvergenceError(f"Carlson start value for wp(t)={c} is not finite")

    residual = math.inf
    for step in range(max_iter):
        residual_value = complex(wp(t, lat, guard=None)) - c
        residual = abs(residual_value)
        if residual <= 1e-3 * tol * scale:
            break
        slope = complex(wp_prime(t, lat, guard=None))
        if abs(slope) < 1e-300:
            break
        t -= residual_value / slope
        logger.debug("inverse_wp Newton step %d: |res|=%.3e", step, residual)
    residual = abs(complex(wp(t, lat, guard=None)) - c)
    if not residual <= tol * scale:
        raise ConvergenceError(
            f"inverse_wp did not converge for c={c}: |wp(t)-c|={residual:.3e}"
        )
    return _to_fundamental(t, lat)
