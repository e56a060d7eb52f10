"""Quantum no-key protocol simulator and security workbench.

A dense-state simulator, four private-quantum-channel key families with
numerical verifiers, an authenticated three-round no-key protocol with
interception hooks, attack harnesses, and brute-force interceptor-view
averaging that checks every security property small enough to enumerate.
"""

from .adversary import (
    AttackOutcome,
    basis_measure_attack,
    forge_authenticated,
    mim_unauthenticated,
)
from .analysis import JointViewReport, ViewReport, adversary_view, joint_view_estimate
from .boolperm import apply_Us, feistel_permute, permutation_table, verify_bijection
from .errors import ResourceLimitError
from .pqc import (
    FAMILIES,
    PQC1,
    PQC2,
    PQC3,
    PQC4,
    BasisCoefficients,
    PqcFamily,
    PqcKey,
    anticommutation_check,
    basis_decompose,
    family_by_name,
    orthonormal_basis_check,
    perfect_encryption_average,
    pqc_apply,
    sample_key,
)
from .protocol import (
    AuthSecret,
    CheckResult,
    PartyState,
    SessionConfig,
    Transcript,
    WireMessage,
    alice_round1,
    alice_round3,
    bob_finish,
    bob_round2,
    run_session,
    run_unauthenticated,
)
from .qsim import (
    DensityMatrix,
    Gate,
    PureState,
    RegisterLayout,
    apply_gate_layer,
    born_weights,
    maximally_mixed,
    measure_register,
    partial_trace,
    to_density,
    trace_distance,
)

__version__ = "0.1.0"
