"""Physical parameters, balance arithmetic and region classification.

Units: hbar = m = 1.  The driving frequency is always derived from the
lattice wave vector (omega = k**2 / 2); it is never a free input.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InfeasibleParameters

#: Default lattice wave vector: two lattice periods (2*pi/k = 4) fit in [-4, 4).
DEFAULT_K = math.pi / 2

#: Relative tolerance for the |V1| = 2|V0| boundary test.
BOUNDARY_RTOL = 1e-12

_BALANCE_RTOL = 1e-12


class Region(enum.Enum):
    PHASE_CONTINUING = "phase-continuing"
    BOUNDARY = "boundary"
    PHASE_JUMPING = "phase-jumping"
    INFEASIBLE = "infeasible"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class FloquetParams:
    """Full parameter set of the driven lattice.

    ``V1`` is stored rather than recomputed so that arbitrary (possibly
    unbalanced) inputs can still be classified; use
    :func:`make_balanced_params` to build a consistent set.
    """

    g1d: float
    V0: float
    V1: float
    EF: float
    k: float = DEFAULT_K
    alpha: int = 1

    @property
    def omega(self) -> float:
        return 0.5 * self.k * self.k

    @property
    def period(self) -> float:
        """Drive period 2*pi/omega."""
        return 2.0 * math.pi / self.omega

    @property
    def N(self) -> float:
        """Average number of atoms per well of V0 cos^2(kx) (width pi/k)."""
        return math.pi * (self.EF - 0.5 * self.V0) / (self.k * self.g1d)

    @property
    def Vc(self) -> float:
        return critical_depth(self)

    @property
    def mu(self) -> float:
        """Chemical potential of the uniform state with the same atom number."""
        return self.EF - 0.5 * self.V0

    @property
    def lattice_period(self) -> float:
        return 2.0 * math.pi / self.k

    def scaled(self, factor: float) -> "FloquetParams":
        """Multiply all energy-like quantities and g1d by ``factor``."""
        return FloquetParams(
            g1d=self.g1d * factor,
            V0=self.V0 * factor,
            V1=self.V1 * factor,
            EF=self.EF * factor,
            k=self.k,
            alpha=self.alpha,
        )

    def as_dict(self) -> dict:
        return {
            "g1d": self.g1d,
            "V0": self.V0,
            "V1": self.V1,
            "EF": self.EF,
            "k": self.k,
            "alpha": self.alpha,
            "omega": self.omega,
            "N": self.N if self.g1d != 0 and self.k > 0 else float("nan"),
            "Vc": self.Vc if self.g1d != 0 and self.k > 0 else float("nan"),
        }


def _sqrt_checks(g1d, V0, EF):
    # (name of the offending root, condition that must hold)
    return [
        ("sqrt(EF/g1d)", EF / g1d >= 0.0),
        ("sqrt(-V0/g1d)", V0 / g1d <= 0.0),
        ("sqrt(-EF*V0)", EF * V0 <= 0.0),
    ]


def make_balanced_params(g1d, V0, EF, k=DEFAULT_K, alpha=1) -> FloquetParams:
    """Build a parameter set obeying the balance condition.

    The driving strength follows from V1 = 2*alpha*sqrt(-EF*V0); omega, N
    and Vc are derived.

    Raises
    ------
    InfeasibleParameters
        If g1d == 0, k <= 0, alpha is not +-1, or one of the square roots of
        the exact state would be imaginary.
    """
    if g1d == 0:
        raise InfeasibleParameters("g1d must be nonzero", which="g1d")
    if not k > 0:
        raise InfeasibleParameters(f"k must be positive, got {k}", which="k")
    if alpha not in (1, -1):
        raise InfeasibleParameters(f"alpha must be +1 or -1, got {alpha}", which="alpha")
    for name, ok in _sqrt_checks(g1d, V0, EF):
        if not ok:
            raise InfeasibleParameters(
                f"{name} is imaginary for g1d={g1d}, V0={V0}, EF={EF}", which=name
            )
    V1 = 2.0 * alpha * math.sqrt(-EF * V0)
    return FloquetParams(g1d=float(g1d), V0=float(V0), V1=V1, EF=float(EF), k=float(k), alpha=int(alpha))


def params_in_units_of_k(V0_over_g, EF_over_g, g1d=1.0, k=DEFAULT_K, alpha=1) -> FloquetParams:
    """Balanced parameters from V0/g1d and EF/g1d given in units of k.

    This is how the two reference parameter sets are usually quoted,
    e.g. ``params_in_units_of_k(-0.3, 3.0)``.
    """
    return make_balanced_params(g1d, V0_over_g * g1d * k, EF_over_g * g1d * k, k=k, alpha=alpha)


def critical_depth(params: FloquetParams) -> float:
    """Vc = 2 k N |g1d| / pi, which equals |2 EF - V0|."""
    return 2.0 * params.k * params.N * abs(params.g1d) / math.pi


def feasibility_violations(params: FloquetParams) -> list[str]:
    """Names of the invariants that ``params`` breaks (empty when feasible)."""
    p = params
    values = (p.g1d, p.V0, p.V1, p.EF, p.k)
    if not all(math.isfinite(v) for v in values):
        return ["non-finite value"]
    if p.g1d == 0:
        return ["g1d == 0"]
    if not p.k > 0:
        return ["k <= 0"]
    out = []
    if p.alpha not in (1, -1):
        out.append("alpha not in {+1, -1}")
    out.extend(name for name, ok in _sqrt_checks(p.g1d, p.V0, p.EF) if not ok)
    if out:
        return out
    expected = 2.0 * p.alpha * math.sqrt(-p.EF * p.V0)
    scale = max(abs(expected), abs(p.V1), abs(p.V0), abs(p.EF))
    if abs(p.V1 - expected) > _BALANCE_RTOL * scale:
        out.append("V1 != 2*alpha*sqrt(-EF*V0)")
    Vc = critical_depth(p)
    if p.N < 0:
        out.append("N < 0")
    if abs(p.V0) > Vc * (1 + _BALANCE_RTOL):
        out.append("|V0| > Vc")
    if abs(p.V1) > Vc / math.sqrt(2.0) * (1 + _BALANCE_RTOL):
        out.append("|V1| > Vc/sqrt(2)")
    return out


def classify_region(params: FloquetParams) -> Region:
    """Place ``params`` in the balance region.

    Boundary (|V1| = 2|V0| within BOUNDARY_RTOL) takes precedence over the
    strict inequalities.  The two degenerate edges are resolved as follows:
    V0 == 0 is the uniform state (phase-continuing), and EF == 0 with
    V0 != 0 (undriven stationary state, |V0| = Vc) is reported as boundary.
    """
    try:
        if feasibility_violations(params):
            return Region.INFEASIBLE
    except (ZeroDivisionError, TypeError):
        return Region.INFEASIBLE
    a1 = abs(params.V1)
    a0 = abs(params.V0)
    if a0 == 0.0:
        return Region.PHASE_CONTINUING
    if abs(a1 - 2.0 * a0) <= BOUNDARY_RTOL * max(a1, 2.0 * a0):
        return Region.BOUNDARY
    if a1 > 2.0 * a0:
        return Region.PHASE_CONTINUING
    Vc = critical_depth(params)
    if Vc / 3.0 < a0 < Vc:
        return Region.PHASE_JUMPING
    return Region.BOUNDARY
