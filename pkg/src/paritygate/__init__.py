"""paritygate: multi-target controlled-phase gates on parity-encoded photonic qubits.

A simulation library for one coupler qutrit dispersively coupled to a
register of microwave cavities: exact diagonal-gate algebra over
parity-encoded logical qubits, the effective and full circuit-QED
Hamiltonians, open-system dynamics, and GHZ-state preparation with fidelity
sweeps.
"""

from ._kernels import USING_COMPILED, backend_name
from .dynamics import (
    CollapseChannel,
    HamiltonianTerm,
    IntegratorConfig,
    TimeDependentHamiltonian,
    Trajectory,
    evolve_lindblad,
    evolve_schrodinger,
    expm_oracle,
    fidelity,
    ket_fidelity,
)
from .encoding import (
    EncodingFamily,
    EncodingFamilySpec,
    ParityEncoding,
    logical_rotation,
    make_encoding,
    rotated_states,
    validate_encoding,
)
from .errors import (
    ConfigError,
    DimensionError,
    EncodingConsistencyError,
    IntegrationAccuracyError,
    InvalidStateError,
    ParityGateError,
    PhaseCoherenceError,
    RegimeError,
    SingularityError,
    TruncationError,
)
from .gate import (
    GateSpec,
    HybridizationClass,
    TruthTable,
    diagonal_gate,
    hybridization_class,
    verify_truth_table,
)
from .ghz import GhzKind, GhzScenario, build_scenario, prepare_full, prepare_ideal
from .hilbert import (
    DensityMatrix,
    HilbertLayout,
    Ket,
    Operator,
    coherent_state,
    embed,
    fock_state,
    mode_operators,
    partial_trace,
    qutrit_operators,
    qutrit_state,
    tensor_state,
)
from .model import (
    DecoherenceParams,
    Detunings,
    EffectiveParams,
    HamiltonianTier,
    HamiltonianToggles,
    SystemParams,
    TargetCountParity,
    build_hamiltonian,
    check_gate_condition,
    check_regime,
    derive_detunings,
    effective_params,
    quality_factor,
    solve_coupling,
)

__version__ = "0.1.0"
