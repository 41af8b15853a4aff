"""Data models for the associated Lamé / SUSY toolkit.

These models are the shared intermediate representation of every layer:
the elliptic core builds :class:`ModulusParams` and
:class:`WeierstrassLattice`, the solver works on :class:`LameModel`,
the SUSY engine on :class:`SeedSpec`, and the CLI serialises
:class:`SampledCurve` instances.  Models carrying only scalars are frozen
(hashable, safe to share between threads); models carrying sampled arrays
are plain dataclasses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np


class AnsatzBranch(Enum):
    A = "a"          # (1,1): A1, A2
    B = "b"          # (1,0): A1, A2 = 0
    C = "c"          # (2,1): B1, B2, B3
    D = "d"          # (2,0): B1, B2 + e2e3, B3 = 0
    FITTED = "fitted"


class SpectralClass(Enum):
    BAND = "band"
    GAP = "gap"
    EDGE = "edge"


class PartnerKind(Enum):
    PERIODIC_BLOCH = "periodic-bloch"
    DEFECT = "defect"


# ── Elliptic lattice ────────────────────────────────────────────────


@dataclass(frozen=True)
class ModulusParams:
    """Squared modulus and the two quarter periods K, K'."""
    k2: float
    k2c: float
    big_k: float
    big_kc: float

    @property
    def k(self) -> float:
        return math.sqrt(self.k2)

    @property
    def kc(self) -> float:
        return math.sqrt(self.k2c)


@dataclass(frozen=True)
class WeierstrassLattice:
    """Weierstrass data for the lattice normalised by e1 - e3 = 1.

    ``omega`` is real and ``omegap`` purely imaginary, so the half-periods
    are ``omega1 = omega``, ``omega2 = omega + omegap``, ``omega3 = omegap``.
    The theta-series constants are cached here because every sigma, zeta
    and theta-route wp evaluation needs them.
    """
    k2: float
    omega: float
    omegap: complex
    e1: float
    e2: float
    e3: float
    g2: float
    g3: float
    eta: float
    etap: complex
    ebar2: float
    ebar3: float
    nome: float = 0.0
    n_terms: int = 0
    theta1p0: float = 0.0     # theta1'(0)
    theta1ppp0: float = 0.0   # theta1'''(0)
    theta2_0: float = 0.0     # theta2(0)

    @property
    def omega1(self) -> complex:
        return complex(self.omega)

    @property
    def omega2(self) -> complex:
        return self.omega + self.omegap

    @property
    def omega3(self) -> complex:
        return self.omegap

    @property
    def branch_values(self) -> tuple[float, float, float]:
        return (self.e1, self.e2, self.e3)


# ── Associated Lamé model ───────────────────────────────────────────


@dataclass(frozen=True)
class LameModel:
    """An associated Lamé potential m(m+1)k^2 sn^2 x + l(l+1)k^2 cn^2 x/dn^2 x."""
    m: int
    ell: int
    modulus: ModulusParams
    lattice: WeierstrassLattice

    @property
    def k2(self) -> float:
        return self.modulus.k2

    @property
    def period(self) -> float:
        """Real period 2K of the potential."""
        return 2.0 * self.modulus.big_k

    @property
    def label(self) -> str:
        return f"({self.m},{self.ell})"

    @property
    def point_count(self) -> int:
        """Number of auxiliary points a_r / b_r in the Bloch product."""
        return self.m + self.ell


@dataclass(frozen=True)
class EnergyPair:
    """Energy in Jacobi form and its Weierstrass-form counterpart."""
    E: float
    Etilde: float


@dataclass(frozen=True)
class AnsatzCoefficients:
    """Coefficients of the product ansatz in powers of p = wp(z) - e1.

    ``coeffs`` follows the printed convention: the leading coefficient
    (power ``r_max``) is fixed to 1 and omitted, the remaining ones are
    listed by decreasing power, e.g. ``(A1, A2)`` for
    ``p + A1 + A2/p``.
    """
    branch: AnsatzBranch
    coeffs: tuple[float, ...]
    r_min: int
    r_max: int
    etilde: float = 0.0

    def laurent(self) -> np.ndarray:
        """Return all coefficients C_r for r = r_min..r_max (ascending)."""
        return np.array(list(reversed(self.coeffs)) + [1.0], dtype=float)

    def numerator(self) -> np.ndarray:
        """Coefficients of p^(-r_min) * Psi, highest power first."""
        return np.array([1.0, *self.coeffs], dtype=float)


@dataclass(frozen=True)
class AuxiliaryPoints:
    """Signed auxiliary points a_r (or b_r) selecting the Bloch pair.

    ``points`` are the canonical signed points used in psi1 (psi2 uses
    their negatives); ``anchor`` is a0 = b0 and ``anchor_sign`` the sign
    of the eta term in the exponent that matched the equation.
    """
    points: tuple[complex, ...]
    wp_values: tuple[complex, ...]
    anchor: complex
    anchor_sign: int
    signs: tuple[int, ...]
    residual: float

    @property
    def sign_pairing(self) -> str:
        pattern = ",".join("+" if s > 0 else "-" for s in self.signs)
        return f"({pattern})|a0={'-' if self.anchor_sign > 0 else '+'}w1"


@dataclass
class BlochPair:
    """Two Bloch solutions sampled on ``x`` with their log-derivatives.

    The arrays are complex inside allowed bands (the two solutions are
    then complex conjugate up to normalisation) and real elsewhere.
    """
    x: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    dlog1: np.ndarray
    dlog2: np.ndarray
    wronskian: complex = 0.0
    degenerate: bool = False
    imag_residue: float = 0.0

    @property
    def is_real(self) -> bool:
        return not (
            np.iscomplexobj(self.psi1) or np.iscomplexobj(self.psi2)
        )


# ── SUSY partners ───────────────────────────────────────────────────


@dataclass(frozen=True)
class SeedSpec:
    """Seed u = psi1 + lambda psi2 at factorization energy epsilon.

    The mixing is stored as an angle ``theta`` with lambda = tan(theta),
    so that lambda = infinity (``theta = pi/2``) is an ordinary value.
    """
    epsilon: float
    theta: float
    model: LameModel
    allow_unsafe: bool = False

    @classmethod
    def from_lambda(
        cls,
        epsilon: float,
        lambda_mix: float,
        model: LameModel,
        allow_unsafe: bool = False,
    ) -> SeedSpec:
        if math.isinf(lambda_mix):
            theta = math.pi / 2 if lambda_mix > 0 else -math.pi / 2
        else:
            theta = math.atan(lambda_mix)
        return cls(epsilon=epsilon, theta=theta, model=model,
                   allow_unsafe=allow_unsafe)

    @property
    def lambda_mix(self) -> float:
        if abs(self.theta - math.pi / 2) < 1e-15:
            return math.inf
        return math.tan(self.theta)

    @property
    def weights(self) -> tuple[float, float]:
        """(w1, w2) with u proportional to w1 psi1 + w2 psi2."""
        if abs(self.theta - math.pi / 2) < 1e-15:
            return (0.0, 1.0)
        return (math.cos(self.theta), math.sin(self.theta))

    @property
    def is_bloch(self) -> bool:
        w1, w2 = self.weights
        return w1 == 0.0 or w2 == 0.0

    @property
    def which(self) -> int:
        """Bloch index (1 or 2) for a pure Bloch seed."""
        return 2 if self.weights[0] == 0.0 else 1


@dataclass(frozen=True)
class PartnerPotential:
    """Description of a first-order SUSY partner."""
    kind: PartnerKind
    seed: SeedSpec
    closed_form_params: tuple[tuple[complex, complex], ...] = ()
    constant_term: float = 0.0
    nodeless_guaranteed: bool = True


@dataclass(frozen=True)
class NodeScan:
    """Outcome of a nodeless check: either nodeless or the first node."""
    nodeless: bool
    first_node: Optional[float] = None


@dataclass(frozen=True)
class DefectState:
    """The square-integrable state 1/u bound at epsilon."""
    epsilon: float
    norm_squared: float
    decay_rate: float
    eigen_residual: float = 0.0
    decay_left: float = 0.0
    decay_right: float = 0.0


# ── Spectral verification ───────────────────────────────────────────


@dataclass(frozen=True)
class MonodromyResult:
    """Transfer matrix over one period for a single energy."""
    energy: float
    m11: float
    m12: float
    m21: float
    m22: float
    classification: SpectralClass

    @property
    def discriminant(self) -> float:
        return self.m11 + self.m22

    @property
    def determinant(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21


@dataclass
class BandStructure:
    """Band edges and the alternating band/gap intervals between them."""
    edges: list[float] = field(default_factory=list)
    bands: list[tuple[float, float]] = field(default_factory=list)
    gaps: list[tuple[float, float]] = field(default_factory=list)
    unresolved: list[tuple[float, float]] = field(default_factory=list)

    @property
    def finite_band_count(self) -> int:
        return sum(1 for lo, hi in self.bands if math.isfinite(hi))


# ── CLI artefacts ───────────────────────────────────────────────────


@dataclass
class RunConfig:
    """Validated command-line parameters for one run."""
    command: str
    m: int = 1
    ell: int = 1
    k2: float = 0.99
    energy: Optional[float] = None
    epsilon: Optional[float] = None
    lambda_mix: float = 0.0
    x_min: Optional[float] = None
    x_max: Optional[float] = None
    samples: int = 2001
    output_path: Optional[str] = None
    fmt: str = "csv"
    allow_unsafe: bool = False

    def validate(self) -> None:
        from core.errors import DomainError

        if self.samples < 2:
            raise DomainError(f"samples must be >= 2, got {self.samples}")
        if (
            self.x_min is not None
            and self.x_max is not None
            and not self.x_min < self.x_max
        ):
            raise DomainError(
                f"x range is empty: [{self.x_min}, {self.x_max}]"
            )
        if not 0.0 < self.k2 < 1.0:
            raise DomainError(f"k2 must lie in (0, 1), got {self.k2}")
        if self.fmt not in ("csv", "json"):
            raise DomainError(f"unknown output format '{self.fmt}'")


@dataclass
class SampledCurve:
    """Named columns sampled on a common grid plus free-form metadata."""
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def column_names(self) -> list[str]:
        return list(self.columns)

    def row_count(self) -> int:
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"column lengths differ: {sorted(lengths)}")
        return lengths.pop() if lengths else 0


@dataclass(frozen=True)
class CheckResult:
    """One line of a verification report."""
    suite: str
    name: str
    tolerance: float
    measured: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.measured)) and self.measured < self.tolerance


@dataclass
class VerificationReport:
    """Aggregated outcome of one or more verification suites."""
    checks: list[CheckResult] = field(default_factory=list)

    def failed(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> dict:
        return {
            "checks": len(self.checks),
            "passed": len(self.checks) - len(self.failed()),
            "failed": len(self.failed()),
        }
