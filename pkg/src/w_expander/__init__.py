"""Post-selected W-state expansion with a Fock-state ancilla in linear optics."""

from .bounds import (
    DistributionVector,
    F_of,
    G_of,
    H1_of,
    H_lossy_of,
    H_m_of,
    H_of,
    P1_opt_of,
    P_lossy_of,
    P_max_of,
    optimum_summary,
    success_prefactor,
    verify_appendices,
    xi_m,
)
from .circuit import (
    CircuitSpec,
    CompiledCircuit,
    build_hm,
    build_lossy,
    build_optimal,
    compile_circuit,
    extract_coefficients,
    load_circuit,
)
from .errors import CircuitValidationError, DimensionError, DomainError
from .expansion import WExpansionProblem, eta_closed_form, eta_via_engine, verify_exact_w
from .fock_engine import FockState, ModeUnitary, permanent, transition_amplitude
from .optimizer import SearchConfig, end_to_end_optimality, maximize_H, scan_symmetric_lossy

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
