"""Associated Lamé models: construction, potential, energy map and band edges.

The potential is

    V(x) = m(m+1) k^2 sn^2 x + l(l+1) k^2 cn^2 x / dn^2 x,

and in the Weierstrass variable ``z = x - iK'`` (lattice with e1 - e3 = 1)

    V = m(m+1) wp(z) + l(l+1) (wp(z + w1) - e1) - m(m+1) e3 + l(l+1).

The exactly solvable pairs are (1,1) and (2,1); the Lamé pairs (1,0) and
(2,0) come for free from the same ansatz.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache

import numpy as np

from core.elliptic import jacobi_sn_cn_dn, lattice_from_modulus, modulus_params
from core.errors import UnsupportedModelError
from core.models import EnergyPair, LameModel

logger = logging.getLogger(__name__)

SUPPORTED_MODELS: tuple[tuple[int, int], ...] = ((1, 1), (2, 1), (1, 0), (2, 0))


def _supported_text() -> str:
    return ", ".join(f"({m},{l})" for m, l in SUPPORTED_MODELS)


# ── Model construction ─────────────────────────────────────────────────


@lru_cache(maxsize=64)
def make_model(m: int, ell: int, k2: float) -> LameModel:
    """Build a validated :class:`LameModel`.

    Raises
    ------
    UnsupportedModelError
        If ``(m, ell)`` is not one of :data:`SUPPORTED_MODELS`.
    DomainError
        If *k2* is outside (0, 1).
    """
    if (m, ell) not in SUPPORTED_MODELS:
        raise UnsupportedModelError(
            f"model ({m},{ell}) is not supported; supported pairs are {_supported_text()}"
        )
    modulus = modulus_params(k2)
    lattice = lattice_from_modulus(k2)
    logger.debug("Built model (%d,%d) with k2=%.6g, K=%.15g", m, ell, k2, modulus.big_k)
    return LameModel(m=m, ell=ell, modulus=modulus, lattice=lattice)


def potential(x, model: LameModel):
    """Evaluate V(x) in Jacobi form; periodic with period 2K."""
    sn, cn, dn = jacobi_sn_cn_dn(x, model.k2)
    k2 = model.k2
    value = model.m * (model.m + 1) * k2 * sn * sn
    if model.ell:
        value = value + model.ell * (model.ell + 1) * k2 * (cn / dn) ** 2
    return value


# ── Energy map ─────────────────────────────────────────────────────────


def energy_transform(energy: float, model: LameModel) -> EnergyPair:
    """Map E to the Weierstrass-form energy ``[E - l(l+1)] ebar3 + e3 m(m+1)``."""
    ell_term = model.ell * (model.ell + 1)
    etilde = (energy - ell_term) * model.lattice.ebar3 \
        + model.lattice.e3 * model.m * (model.m + 1)
    return EnergyPair(E=float(energy), Etilde=float(etilde))


def inverse_energy_transform(etilde: float, model: LameModel) -> float:
    lat = model.lattice
    return float(
        (etilde - lat.e3 * model.m * (model.m + 1)) / lat.ebar3
        + model.ell * (model.ell + 1)
    )


# ── Band edges ─────────────────────────────────────────────────────────


def band_edges(model: LameModel) -> list[float]:
    """Closed-form band edges, sorted ascending.

    (1,1) has three edges (one finite band, one finite gap), (2,1) five,
    the Lamé pairs (1,0) and (2,0) three and five respectively.
    """
    k2 = model.k2
    kc = math.sqrt(1.0 - k2)
    key = (model.m, model.ell)
    if key == (1, 1):
        edges = [2.0 + k2 - 2.0 * kc, 2.0 + k2 + 2.0 * kc, 4.0]
    elif key == (2, 1):
        r1 = 2.0 * math.sqrt(4.0 - 3.0 * k2)
        r2 = 2.0 * math.sqrt(k2 * k2 - 5.0 * k2 + 4.0)
        edges = [4.0 * k2, 5.0 + k2 - r1, 5.0 + 2.0 * k2 - r2,
                 5.0 + 2.0 * k2 + r2, 5.0 + k2 + r1]
    elif key == (1, 0):
        edges = [k2, 1.0, 1.0 + k2]
    elif key == (2, 0):
        r = 2.0 * math.sqrt(1.0 - k2 + k2 * k2)
        edges = [2.0 + 2.0 * k2 - r, 1.0 + k2, 1.0 + 4.0 * k2, 4.0 + k2,
                 2.0 + 2.0 * k2 + r]
    else:
        raise UnsupportedModelError(
            f"no band-edge formulas for {model.label}; supported pairs are {_supported_text()}"
        )
    return sorted(edges)


def ground_energy(model: LameModel) -> float:
    """Lowest band edge E0."""
    return band_edges(model)[0]


def energy_window(model: LameModel, below: float = 1.0, above: float = 3.0) -> np.ndarray:
    """``(lo, hi)`` bracketing all finite bands with the given margins."""
    edges = band_edges(model)
    return np.array([edges[0] - below, edges[-1] + above])
