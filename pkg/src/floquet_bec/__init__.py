"""Exact Floquet states of a driven 1D condensate and their stability.

Closed-form Floquet solution, split-step GP solver, linearised stability
evolution and fidelity diagnostics.  Units: hbar = m = 1.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    GridMismatch,
    InfeasibleParameters,
    LoopAmbiguous,
    NonFiniteField,
    SingularCoefficient,
)
from .params import (  # noqa: E402
    FloquetParams,
    Region,
    classify_region,
    critical_depth,
    make_balanced_params,
    params_in_units_of_k,
)
from .exact import psi_exact, density, phase, phase_gradient, vortex_nodes, winding_number, VortexNode  # noqa: E402
from .solver import Grid, WaveField, RampSchedule, potential, step, evolve, add_white_noise  # noqa: E402
from .diagnostics import (  # noqa: E402
    DiagnosticsTrace,
    conserved_norm,
    density_uniformity,
    detect_vortices_numerical,
    fidelity,
)
