"""Fixed-architecture MLP policy with a flat parameter vector.

The network maps a 12-dimensional reduced state through four hidden layers
of 32 rectified units to 45 sigmoid outputs. Parameters live in one flat
float64 vector (layer-major [W1|b1|...|W5|b5], row-major weights) so the
evolution-strategies trainer can perturb and serialize them wholesale.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OBS_DIM = 12
ACTION_DIM = 45
HIDDEN = (32, 32, 32, 32)

OBSERVATION_FIELDS = (
    "v_x_des", "v_y_des",
    "v_x_avg", "v_y_avg",
    "v_x_err", "v_y_err",
    "roll", "pitch", "yaw",
    "roll_rate", "pitch_rate", "yaw_rate",
)

# Pre-sigmoid clamp keeping outputs strictly inside (0, 1) in float64;
# identity for any reachable activation magnitude.
_LOGIT_LIMIT = 36.0


@dataclass(frozen=True)
class Architecture:
    input_dim: int = OBS_DIM
    hidden: tuple[int, ...] = HIDDEN
    output_dim: int = ACTION_DIM

    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) per layer, input to output."""
        sizes = (self.input_dim, *self.hidden, self.output_dim)
        return [(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]

    def param_count(self) -> int:
        return sum(n_in * n_out + n_out for n_in, n_out in self.layer_dims())


DEFAULT_ARCH = Architecture()
PARAM_COUNT = DEFAULT_ARCH.param_count()


@dataclass(frozen=True)
class PolicyParams:
    """Flat parameter vector plus the architecture it parameterizes."""

    flat: np.ndarray
    arch: Architecture = field(default=DEFAULT_ARCH)

    def __post_init__(self) -> None:
        flat = np.asarray(self.flat, dtype=float)
        object.__setattr__(self, "flat", flat)
        expected = self.arch.param_count()
        if flat.shape != (expected,):
            raise ValueError(f"expected {expected} parameters, got {flat.shape}")


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-channel (center, half_range) for the 12 observation channels."""

    center: np.ndarray
    half_range: np.ndarray

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=float)
        half_range = np.asarray(self.half_range, dtype=float)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_range", half_range)
        if center.shape != (OBS_DIM,) or half_range.shape != (OBS_DIM,):
            raise ValueError(f"normalization spec needs {OBS_DIM} channels")
        if not np.all(half_range > 0.0):
            raise ValueError("half_range entries must be > 0")


def default_normalization() -> NormalizationSpec:
    """Operating-envelope defaults: velocities +-1.5 m/s, errors +-1.0 m/s,
    angles +-0.5 rad, rates +-2.0 rad/s, all centered at zero."""
    half = np.array([1.5, 1.5, 1.5, 1.5, 1.0, 1.0, 0.5, 0.5, 0.5, 2.0, 2.0, 2.0])
    return NormalizationSpec(center=np.zeros(OBS_DIM), half_range=half)


def normalize(obs: np.ndarray, spec: NormalizationSpec) -> np.ndarray:
    """Map observations into [-0.5, 0.5], clamping overflow.

    Transient spikes (e.g. during pushes) clamp rather than error; only
    non-finite inputs are rejected.
    """
    obs = np.asarray(obs, dtype=float)
    if obs.shape != (OBS_DIM,):
        raise ValueError(f"observation must have shape ({OBS_DIM},), got {obs.shape}")
    if not np.all(np.isfinite(obs)):
        raise ValueError("observation contains non-finite values")
    scaled = (obs - spec.center) / (2.0 * spec.half_range)
    return np.clip(scaled, -0.5, 0.5)


def init(seed: int, arch: Architecture = DEFAULT_ARCH) -> PolicyParams:
    """Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero."""
    rng = np.random.default_rng(seed)
    chunks = []
    for n_in, n_out in arch.layer_dims():
        bound = 1.0 / np.sqrt(n_in)
        chunks.append(rng.uniform(-bound, bound, size=n_out * n_in))
        chunks.append(np.zeros(n_out))
    return PolicyParams(flat=np.concatenate(chunks), arch=arch)


class PolicyEvaluator:
    """Forward-pass engine holding weight views into the flat vector.

    Slicing happens once at construction; repeated forward() calls reuse
    preallocated activation buffers, which matters because the surrogate
    evaluates the policy every millisecond of simulated time.
    """

    def __init__(self, params: PolicyParams):
        self.params = params
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        offset = 0
        flat = params.flat
        for n_in, n_out in params.arch.layer_dims():
            w = flat[offset:offset + n_out * n_in].reshape(n_out, n_in)
            offset += n_out * n_in
            b = flat[offset:offset + n_out]
            offset += n_out
            self.weights.append(w)
            self.biases.append(b)
        self._bufs = [np.empty(w.shape[0]) for w in self.weights]

    def forward(self, normalized_obs: np.ndarray) -> np.ndarray:
        h = normalized_obs
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            buf = self._bufs[i]
            np.dot(w, h, out=buf)
            buf += b
            if i < last:
                np.maximum(buf, 0.0, out=buf)
            h = buf
        out = np.clip(h, -_LOGIT_LIMIT, _LOGIT_LIMIT)
        np.exp(-out, out=out)
        out += 1.0
        np.reciprocal(out, out=out)
        return out.copy()

    def pre_sigmoid(self, normalized_obs: np.ndarray) -> np.ndarray:
        """Final-layer activations before the sigmoid, for diagnostics."""
        h = normalized_obs
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = w @ h + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h


def forward(params: PolicyParams, normalized_obs: np.ndarray) -> np.ndarray:
    """One-shot forward pass; builds an evaluator per call."""
    normalized_obs = np.asarray(normalized_obs, dtype=float)
    if normalized_obs.shape != (params.arch.input_dim,):
        raise ValueError(
            f"input must have shape ({params.arch.input_dim},), got {normalized_obs.shape}"
        )
    return PolicyEvaluator(params).forward(normalized_obs)
