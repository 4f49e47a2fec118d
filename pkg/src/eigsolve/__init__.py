"""Single-shot reinforcement-learning eigensolver simulator with a VQE baseline."""

__version__ = "0.1.0"

from .agent import AgentUnitary, EulerParams, RotationAngles, euler_unitary, two_level_rotation, update_agent
from .analysis import exact_overlap_fidelity, exact_probability_fidelity, fidelity_from_p0, p0_from_fidelity
from .environment import Observable, ShotSource, outcome_distribution, single_shot
from .presets import PRESETS, get_preset
from .qcore import Spectrum, eigendecompose, expm_hermitian
from .rlsolver import ProtocolOptions, RestartSchedule, RewardState, run_batch, run_protocol

__all__ = [
    "AgentUnitary",
    "EulerParams",
    "Observable",
    "PRESETS",
    "ProtocolOptions",
    "RestartSchedule",
    "RewardState",
    "RotationAngles",
    "ShotSource",
    "Spectrum",
    "eigendecompose",
    "euler_unitary",
    "exact_overlap_fidelity",
    "exact_probability_fidelity",
    "expm_hermitian",
    "fidelity_from_p0",
    "get_preset",
    "outcome_distribution",
    "p0_from_fidelity",
    "run_batch",
    "run_protocol",
    "single_shot",
    "two_level_rotation",
    "update_agent",
]
