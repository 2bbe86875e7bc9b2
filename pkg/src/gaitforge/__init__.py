"""Gait learning for 3D bipedal walking.

Core pieces: Bezier trajectory math, policy output decoding, heuristic
regulators, an MLP policy over a reduced state, the appendix-style reward
stack, a deterministic reduced-order surrogate environment, and an
evolution-strategies trainer. See the README for the CLI entry points.
"""
from .bezier import BezierCurve, PhaseClock, bezier_deriv, bezier_eval, phase, residual
from .config import ESConfig, RunConfig, default_config, load_config
from .decoder import ActionBounds, ActionDecoder, GaitParameters, symmetry_matrix
from .env import BipedEnv, EnvParams, PushEvent, SimState, StepResult
from .policy import (
    NormalizationSpec,
    PolicyParams,
    default_normalization,
    forward,
    init,
    normalize,
)
from .rewards import RewardInputs, RewardVector, TerminationState, compute, terminated

__version__ = "0.1.0"

__all__ = [
    "ActionBounds",
    "ActionDecoder",
    "BezierCurve",
    "BipedEnv",
    "ESConfig",
    "EnvParams",
    "GaitParameters",
    "NormalizationSpec",
    "PhaseClock",
    "PolicyParams",
    "PushEvent",
    "RewardInputs",
    "RewardVector",
    "RunConfig",
    "SimState",
    "StepResult",
    "TerminationState",
    "bezier_deriv",
    "bezier_eval",
    "compute",
    "default_config",
    "default_normalization",
    "forward",
    "init",
    "load_config",
    "normalize",
    "phase",
    "residual",
    "symmetry_matrix",
    "terminated",
]
