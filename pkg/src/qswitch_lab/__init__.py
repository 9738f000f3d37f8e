"""Deterministic simulator for coherently controlled quantum channels.

The package builds channels whose configuration (execution order or channel
choice) is selected by a quantum control system that may be entangled with
the transmitted data, and verifies the resulting identities and protocol
guarantees numerically: private classical transmission, bipartite
entanglement establishment, and multipartite GHZ distribution over
information-erasing channels.
"""

from .channels import (
    ChannelComparison,
    ChoiMatrix,
    ExtendedChannel,
    KrausChannel,
    apply,
    canonicalize_extension,
    channels_equal,
    choi,
    erasing_channel,
    identity_channel,
    remix,
    vacuum_extend,
)
from .combinators import (
    ControlledChannelSpec,
    TDecomposition,
    choice_two,
    coincidence_extensions,
    controlled_choice,
    cyclic_switch,
    k_closed_form,
    k_multiline,
    k_multiline_enumerated,
    switch_two,
    t_decomposition,
    target_sector_restriction,
)
from .linalg import (
    DensityMatrix,
    Ket,
    MeasurementBranch,
    Operator,
    SchmidtDecomposition,
    SubsystemLayout,
    apply_unitary,
    basis_ket,
    fidelity_with_ket,
    fourier_basis,
    fourier_ket,
    ghz_ket,
    maximally_entangled_ket,
    partial_trace,
    projective_measure,
    schmidt_decomposition,
    tensor,
    tensor_all,
    trace_distance,
)
from .metrics import (
    BipartitionReport,
    concurrence_2qubit,
    ggm,
    helstrom_error,
    is_maximally_entangled,
    mutual_information,
)
from .numeric import NumericPolicy, ResourceGuardError, policy
from .protocols import (
    Branch,
    ProtocolTranscript,
    ResourceState,
    StageRecord,
    classical_flag_encodings,
    clone_extend_unitary,
    correction_unitary,
    decode_summary,
    dfs_phase_encodings,
    fixed_configuration_baseline,
    necessity_sweep,
    phase_encoding_unitary,
    privacy_report,
    run_bipartite_establishment,
    run_ghz_distribution,
    run_private_dit,
)

__version__ = "0.1.0"
