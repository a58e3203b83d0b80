# singapore_qkd 包初始化文件
from .config import QkdConfig
from .enums import Letter, PomLabel, Role, MessageType, Phase, Verdict, AttackKind, SiftingStep
from .errors import (QkdError, InvalidStateError, SubsystemError, NoiseRangeError, DistributionError,
                     SiftingError, InsufficientDataError, ThresholdError, ReferenceDataError,
                     ProtocolError, TransportClosed, PeerAborted)
from .quantum import (PauliVector, DensityOperator, PureState, singlet, tensor, partial_trace,
                      reduce_after_effect, eigenvalues, von_neumann_entropy, binary_entropy,
                      shannon_mutual_information, trace_distance, fidelity)
from .measurement import (Pom, JointDistribution, tetrahedron_vectors, tetra_pom, six_state_pom,
                          joint_distribution, ideal_joint_distribution, reconstruct_state,
                          frequencies_from_letters, project_to_state, marginals)
from .source import (NoiseModel, LetterSequence, RngStream, noisy_singlet, purification, reduced_ancilla,
                     conditioned_ancilla, conditioned_ancillas, tetra_joint_distribution, sample_pairs,
                     sample_pairs_partitioned, twirl, twirled_distribution, is_separable)
from .systems.sifting import (SiftingConfig, SiftingTranscript, SiftingParty, KeyAccounting, run_sifting,
                              run_renes_sifting, replay_key, residual_statistics, ideal_efficiency)
from .systems.security import (SecurityCurve, ThresholdReport, solve_threshold, mutual_info_tetra,
                               mutual_info_six, eve_noise, noise_from_eve_noise, ck_yield, ck_threshold,
                               holevo_chi, holevo_chi_explicit, holevo_message_attack_oneway,
                               holevo_oneway_threshold, bit_error, secondary_noise, table_one_reference,
                               security_curves)
from .systems.message_attack import first_round_message_attack, message_attack_at
from .systems.session import (AcceptancePolicy, SourceAcceptance, SessionConfig, SessionResult,
                              estimate_epsilon, acceptance_test, run_session, run_loopback)
from .systems.transport import transports

__all__ = [
    "QkdConfig",
    "Letter",
    "PomLabel",
    "Role",
    "MessageType",
    "Phase",
    "Verdict",
    "AttackKind",
    "SiftingStep",
    "QkdError",
    "InvalidStateError",
    "SubsystemError",
    "NoiseRangeError",
    "DistributionError",
    "SiftingError",
    "InsufficientDataError",
    "ThresholdError",
    "ReferenceDataError",
    "ProtocolError",
    "TransportClosed",
    "PeerAborted",
    "PauliVector",
    "DensityOperator",
    "PureState",
    "singlet",
    "tensor",
    "partial_trace",
    "reduce_after_effect",
    "eigenvalues",
    "von_neumann_entropy",
    "binary_entropy",
    "shannon_mutual_information",
    "trace_distance",
    "fidelity",
    "Pom",
    "JointDistribution",
    "tetrahedron_vectors",
    "tetra_pom",
    "six_state_pom",
    "joint_distribution",
    "ideal_joint_distribution",
    "reconstruct_state",
    "frequencies_from_letters",
    "project_to_state",
    "marginals",
    "NoiseModel",
    "LetterSequence",
    "RngStream",
    "noisy_singlet",
    "purification",
    "reduced_ancilla",
    "conditioned_ancilla",
    "conditioned_ancillas",
    "tetra_joint_distribution",
    "sample_pairs",
    "sample_pairs_partitioned",
    "twirl",
    "twirled_distribution",
    "is_separable",
    "SiftingConfig",
    "SiftingTranscript",
    "SiftingParty",
    "KeyAccounting",
    "run_sifting",
    "run_renes_sifting",
    "replay_key",
    "residual_statistics",
    "ideal_efficiency",
    "SecurityCurve",
    "ThresholdReport",
    "solve_threshold",
    "mutual_info_tetra",
    "mutual_info_six",
    "eve_noise",
    "noise_from_eve_noise",
    "ck_yield",
    "ck_threshold",
    "holevo_chi",
    "holevo_chi_explicit",
    "holevo_message_attack_oneway",
    "holevo_oneway_threshold",
    "bit_error",
    "secondary_noise",
    "table_one_reference",
    "security_curves",
    "first_round_message_attack",
    "message_attack_at",
    "AcceptancePolicy",
    "SourceAcceptance",
    "SessionConfig",
    "SessionResult",
    "estimate_epsilon",
    "acceptance_test",
    "run_session",
    "run_loopback",
    "transports"
]
