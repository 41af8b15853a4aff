"""Exact Bloch solutions of the associated Lamé equation.

With ``z = x - iK'`` and auxiliary points ``tau_r`` satisfying
``wp(tau_r) = wp_r`` (the numerator roots of the product ansatz), the two
Bloch solutions are

    psi(z; tau) = prod_r sigma(z + tau_r) / (sigma(z)^m sigma(z + w1)^l)
                  * exp(z (-sum_r zeta(tau_r) + s l eta)),

with ``psi1 = psi(.; tau)`` and ``psi2 = psi(.; -tau)``.  The signs of the
points and the anchor sign ``s`` (the ``a0 = -s w1`` term) are not fixed by
the roots alone; they are selected by the Riccati residual

    L' + L^2 - (V - E) = 0,   L = (log psi)',

which is evaluated analytically from zeta and wp sums.  Everything is
computed in logarithms, so Bloch functions growing over many periods do not
overflow before normalisation.
"""

from __future__ import annotations

import itertools
import logging
import math
from functools import lru_cache
from typing import Optional

import numpy as np

from core.ansatz import ansatz_coefficients, numerator_roots
from core.elliptic import inverse_wp, log_sigma, reduce_to_cell, weier_zeta, wp
from core.errors import NormalizationError
from core.lame import energy_transform, potential
from core.models import AuxiliaryPoints, BlochPair, LameModel

logger = logging.getLogger(__name__)

REALNESS_TOL = 1e-9
DEGENERACY_TOL = 1e-7
SELF_CONJUGATE_TOL = 1e-7
NORMALIZATION_FLOOR = 1e-12
_REFERENCE_SHIFTS = 10
_PROBE_FRACTIONS = np.array([0.0731, 0.2113, 0.3389, 0.4619, 0.5801, 0.7077, 0.8291, 0.9467])


# ── Analytic pieces ────────────────────────────────────────────────────


def _z_of_x(x, model: LameModel) -> np.ndarray:
    return np.asarray(x, dtype=float) - model.lattice.omegap


def _exponent(tau: np.ndarray, model: LameModel, anchor_sign: int) -> complex:
    lat = model.lattice
    zeta_sum = complex(np.sum(np.asarray(weier_zeta(tau, lat, guard=None)))) if tau.size else 0j
    return -zeta_sum + anchor_sign * model.ell * lat.eta


def _point_sum(fn, z: np.ndarray, tau: np.ndarray) -> np.ndarray:
    if not tau.size:
        return np.zeros(z.shape, dtype=complex)
    return np.sum(np.asarray(fn(z[..., None] + tau)), axis=-1)


def _log_psi(z: np.ndarray, tau: np.ndarray, model: LameModel, shift: complex) -> np.ndarray:
    lat = model.lattice
    z = np.asarray(z, dtype=complex)
    value = _point_sum(lambda w: log_sigma(w, lat), z, tau)
    value = value - model.m * np.asarray(log_sigma(z, lat))
    if model.ell:
        value = value - model.ell * np.asarray(log_sigma(z + lat.omega, lat))
    return value + shift * z


def _dlog(z: np.ndarray, tau: np.ndarray, model: LameModel, shift: complex) -> np.ndarray:
    lat = model.lattice
    z = np.asarray(z, dtype=complex)
    value = _point_sum(lambda w: weier_zeta(w, lat, guard=None), z, tau)
    value = value - model.m * np.asarray(weier_zeta(z, lat, guard=None))
    if model.ell:
        value = value - model.ell * np.asarray(weier_zeta(z + lat.omega, lat, guard=None))
    return value + shift


def _wp_theta(z, lat):
    # the theta route keeps full relative accuracy next to the poles
    with np.errstate(divide="ignore", invalid="ignore"):
        return wp(z, lat, route="theta", guard=None)


def _dlog_prime(z: np.ndarray, tau: np.ndarray, model: LameModel) -> np.ndarray:
    lat = model.lattice
    z = np.asarray(z, dtype=complex)
    value = -_point_sum(lambda w: _wp_theta(w, lat), z, tau)
    value = value + model.m * np.asarray(_wp_theta(z, lat))
    if model.ell:
        value = value + model.ell * np.asarray(_wp_theta(z + lat.omega, lat))
    return value


def _riccati_terms(x, tau, model: LameModel, shift: complex, energy: float):
    z = _z_of_x(x, model)
    dlog = _dlog(z, tau, model, shift)
    dlog_p = _dlog_prime(z, tau, model)
    u = potential(np.asarray(x, dtype=float), model) - energy
    return dlog, dlog_p, u


def _pointwise_riccati(x, tau, model, shift, energy) -> np.ndarray:
    dlog, dlog_p, u = _riccati_terms(x, tau, model, shift, energy)
    with np.errstate(invalid="ignore", over="ignore"):
        rel = np.abs(dlog_p + dlog * dlog - u) / (
            np.abs(dlog_p) + np.abs(dlog) ** 2 + np.abs(u) + 1e-300
        )
    return np.where(np.isfinite(rel), rel, np.inf)


# ── Auxiliary points ───────────────────────────────────────────────────


def _canonicalize(tau: np.ndarray, wp_values: tuple[complex, ...], model: LameModel):
    """Reduce into the centred cell, fix the global sign and order the points."""
    lat = model.lattice
    if not tau.size:
        return tau, wp_values, False
    reduced = np.array([complex(reduce_to_cell(t, lat)[0]) for t in tau])
    imag_tol = 1e-10 * max(1.0, lat.omegap.imag)
    is_real = np.abs(reduced.imag) <= imag_tol

    if np.any(is_real):
        lead = reduced[int(np.argmax(is_real))].real
    else:
        lead = reduced[0].real
    flipped = lead > 0
    if flipped:
        reduced = np.array([complex(reduce_to_cell(-t, lat)[0]) for t in reduced])
    reduced = np.where(is_real, reduced.real + 0j, reduced)

    real_idx = [i for i in range(len(reduced)) if is_real[i]]
    cplx_idx = sorted(
        (i for i in range(len(reduced)) if not is_real[i]),
        key=lambda i: (-reduced[i].imag, reduced[i].real),
    )
    order = real_idx + cplx_idx
    return reduced[order], tuple(wp_values[i] for i in order), flipped


@lru_cache(maxsize=512)
def auxiliary_points(model: LameModel, energy: float) -> AuxiliaryPoints:
    """Resolve the signed auxiliary points a_r (or b_r) at *energy*.

    The preimages ``t_r = inverse_wp(wp_r)`` are combined with every sign
    pattern (the first sign fixed, since flipping all of them only swaps
    psi1 and psi2) and, for l > 0, both anchor signs.  The combination with
    the smallest Riccati residual over probe points is kept, then made
    canonical: points reduced to the centred cell, the first real point
    negative, real points before complex ones (upper half-plane first).

    Raises
    ------
    ConvergenceError
        Propagated from :func:`inverse_wp`.
    """
    lat = model.lattice
    etilde = energy_transform(energy, model).Etilde
    coeffs = ansatz_coefficients(model, etilde)
    wp_values = numerator_roots(coeffs, lat)
    base = np.array([inverse_wp(c, lat) for c in wp_values], dtype=complex)
    probes = model.period * _PROBE_FRACTIONS

    anchors = (1, -1) if model.ell else (1,)
    best: Optional[tuple[float, tuple[int, ...], int, np.ndarray]] = None
    patterns = (
        [(1, *tail) for tail in itertools.product((1, -1), repeat=len(base) - 1)]
        if len(base) else [()]
    )
    for signs in patterns:
        tau = base * np.array(signs, dtype=float)
        for anchor_sign in anchors:
            residual = 0.0
            for candidate in (tau, -tau):
                shift = _exponent(candidate, model, anchor_sign)
                residual = max(
                    residual,
                    float(np.max(_pointwise_riccati(probes, candidate, model, shift, energy))),
                )
            logger.debug(
                "E=%.12g signs=%s anchor=%+d residual=%.3e", energy, signs, anchor_sign, residual
            )
            if best is None or residual < best[0]:
                best = (residual, signs, anchor_sign, tau)

    residual, signs, anchor_sign, tau = best
    points, ordered_values, flipped = _canonicalize(tau, wp_values, model)
    if flipped:
        signs = tuple(-s for s in signs)
    logger.info(
        "Auxiliary points for %s at E=%.10g: %s (residual %.2e)",
        model.label, energy, ", ".join(f"{p:.6g}" for p in points), residual,
    )
    return AuxiliaryPoints(
        points=tuple(complex(p) for p in points),
        wp_values=ordered_values,
        anchor=complex(-anchor_sign * lat.omega),
        anchor_sign=anchor_sign,
        signs=signs,
        residual=residual,
    )


def _self_conjugate(tau: np.ndarray, model: LameModel) -> bool:
    """True when ``-tau`` is a permutation of *tau* modulo the period lattice."""
    lat = model.lattice
    tol = SELF_CONJUGATE_TOL * max(1.0, lat.omega, lat.omegap.imag)
    remaining = list(-tau)
    for t in tau:
        for j, s in enumerate(remaining):
            if abs(complex(reduce_to_cell(t - s, lat)[0])) <= tol:
                remaining.pop(j)
                break
        else:
            return False
    return True


# ── Bloch solution ─────────────────────────────────────────────────────


class BlochSolution:
    """Both Bloch solutions of one model at one energy.

    Points, exponents and the normalisation at the reference point are
    computed once; :meth:`psi`, :meth:`dlog` and :meth:`pair` then evaluate
    on arbitrary x-grids.  Each solution is normalised to 1 at ``x_ref = K``
    (moved by ``0.1 K`` while the value there is negligible against the
    period maximum).
    """

    def __init__(self, model: LameModel, energy: float) -> None:
        self.model = model
        self.energy = float(energy)
        self.points = auxiliary_points(model, self.energy)
        tau = np.array(self.points.points)
        self._tau = {1: tau, 2: -tau}
        self._shift = {
            which: _exponent(self._tau[which], model, self.points.anchor_sign)
            for which in (1, 2)
        }
        self.x_ref = {}
        self._log_ref = {}
        for which in (1, 2):
            self.x_ref[which], self._log_ref[which] = self._reference(which)

        lref = self.dlog(self.x_ref[1], 1)
        rel = abs(self.dlog(self.x_ref[1], 2) - lref) / (
            abs(lref) + abs(self.dlog(self.x_ref[1], 2)) + 1.0
        )
        self.degenerate = _self_conjugate(tau, model) or bool(rel < DEGENERACY_TOL)
        if self.degenerate:
            logger.info("E=%.12g is a band edge of %s: Bloch solutions coincide",
                        self.energy, model.label)

    def _reference(self, which: int) -> tuple[float, complex]:
        k = self.model.modulus.big_k
        grid = np.linspace(0.0, self.model.period, 64, endpoint=False)
        peak = float(np.max(self.log_psi_raw(grid, which).real))
        x_ref = k
        for _ in range(_REFERENCE_SHIFTS):
            value = complex(self.log_psi_raw(x_ref, which))
            if value.real - peak > math.log(NORMALIZATION_FLOOR):
                return x_ref, value
            logger.debug("psi%d negligible at x_ref=%.6g; shifting", which, x_ref)
            x_ref += 0.1 * k
        raise NormalizationError(
            f"psi{which} of {self.model.label} at E={self.energy} vanishes at every reference point"
        )

    # ── Evaluation ──────────────────────────────────────────────

    def log_psi_raw(self, x, which: int = 1) -> np.ndarray:
        """Unnormalised ``log psi`` (branch of the imaginary part arbitrary)."""
        return _log_psi(_z_of_x(x, self.model), self._tau[which], self.model,
                        self._shift[which])

    def log_psi(self, x, which: int = 1) -> np.ndarray:
        """``log psi`` normalised so that ``psi(x_ref) = 1``."""
        return self.log_psi_raw(x, which) - self._log_ref[which]

    def psi(self, x, which: int = 1) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_psi(x, which))

    def dlog(self, x, which: int = 1) -> np.ndarray:
        """Logarithmic derivative ``psi'/psi``."""
        return _dlog(_z_of_x(x, self.model), self._tau[which], self.model,
                     self._shift[which])

    def dlog_prime(self, x, which: int = 1) -> np.ndarray:
        """Derivative of :meth:`dlog`, a sum of wp values."""
        return _dlog_prime(_z_of_x(x, self.model), self._tau[which], self.model)

    def second_derivative(self, x, which: int = 1) -> np.ndarray:
        """``psi'' = (L' + L^2) psi`` from the analytic log-derivative."""
        dlog = self.dlog(x, which)
        return (self.dlog_prime(x, which) + dlog * dlog) * self.psi(x, which)

    def wronskian(self, x) -> np.ndarray:
        """``psi1 psi2' - psi2 psi1' = psi1 psi2 (L2 - L1)``."""
        return self.psi(x, 1) * self.psi(x, 2) * (self.dlog(x, 2) - self.dlog(x, 1))

    def floquet_multiplier(self, which: int = 1) -> complex:
        """``rho = psi(x + 2K) / psi(x)``, exact through the sigma quasi-periodicity."""
        x0 = self.x_ref[which]
        delta = self.log_psi_raw(x0 + self.model.period, which) - self.log_psi_raw(x0, which)
        return complex(np.exp(delta))

    def riccati_residual(self, x) -> float:
        """Relative Schrödinger residual of both solutions over *x*.

        ``sup |psi (L' + L^2 - V + E)| / (max(1, |E|) sup |psi|)``.
        """
        worst = 0.0
        for which in (1, 2):
            dlog, dlog_p, u = _riccati_terms(x, self._tau[which], self.model,
                                             self._shift[which], self.energy)
            psi = np.abs(self.psi(x, which))
            with np.errstate(invalid="ignore"):
                defect = psi * np.abs(dlog_p + dlog * dlog - u)
            # zeros of psi on the grid contribute nothing
            num = float(np.max(np.where(psi > 0.0, defect, 0.0)))
            den = max(1.0, abs(self.energy)) * float(np.max(psi))
            worst = max(worst, num / den)
        return worst

    def pair(self, x) -> BlochPair:
        """Sample both solutions on *x* as a :class:`BlochPair`.

        Values are real arrays when the imaginary residue after
        normalisation is below ``REALNESS_TOL`` (energies outside the
        bands) and complex otherwise.
        """
        x = np.asarray(x, dtype=float)
        psi1, psi2 = self.psi(x, 1), self.psi(x, 2)
        dlog1, dlog2 = self.dlog(x, 1), self.dlog(x, 2)
        if self.degenerate:
            psi2, dlog2 = psi1.copy(), dlog1.copy()

        residue = 0.0
        for arr in (psi1, psi2):
            scale = float(np.max(np.abs(arr))) if arr.size else 1.0
            residue = max(residue, float(np.max(np.abs(arr.imag))) / scale if scale else 0.0)
        if residue < REALNESS_TOL:
            psi1, psi2, dlog1, dlog2 = psi1.real, psi2.real, dlog1.real, dlog2.real

        w = complex(np.mean(self.wronskian(x))) if not self.degenerate else 0j
        if abs(w.imag) <= REALNESS_TOL * max(1.0, abs(w)):
            w = w.real
        return BlochPair(x=x, psi1=psi1, psi2=psi2, dlog1=dlog1, dlog2=dlog2,
                         wronskian=w, degenerate=self.degenerate, imag_residue=residue)


@lru_cache(maxsize=128)
def bloch_solution(model: LameModel, energy: float) -> BlochSolution:
    """Cached :class:`BlochSolution` for repeated evaluation."""
    return BlochSolution(model, float(energy))


def bloch_pair(x, model: LameModel, energy: float) -> BlochPair:
    return bloch_solution(model, energy).pair(x)


def bloch_log_derivative(x, model: LameModel, energy: float, which: int = 1):
    """``psi_which' / psi_which``; real outside the bands."""
    value = bloch_solution(model, energy).dlog(x, which)
    if np.all(np.abs(np.imag(value)) <= REALNESS_TOL * np.maximum(1.0, np.abs(value))):
        value = np.real(value)
    return value


def bloch_riccati_residual(x, model: LameModel, energy: float) -> float:
    return bloch_solution(model, energy).riccati_residual(x)


def floquet_multiplier(model: LameModel, energy: float, which: int = 1) -> complex:
    return bloch_solution(model, energy).floquet_multiplier(which)
