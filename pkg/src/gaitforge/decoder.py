"""Decoding of raw policy outputs into full gait parameters.

The policy emits 45 numbers in (0, 1), laid out as
[32 Bezier coefficient channels][5 joint derivative gains][4 foot placement
gains][4 torso gains]. Decoding scales each channel into its physical
bounds, rebuilds the full 6x10 right-stance coefficient matrix by anchoring
each learned joint's first and last coefficient to the measured joint
position at step start, and mirrors the matrix into the left-stance set.

Joint columns follow a fixed physical order:

    0 stance hip-roll   5 swing hip-roll
    1 stance hip-yaw    6 swing hip-yaw
    2 stance hip-pitch  7 swing hip-pitch
    3 stance knee       8 swing knee
    4 stance ankle      9 swing ankle

for the reference (right-stance) matrix, i.e. columns 0-4 are the right leg
and 5-9 the left leg. Ankle columns carry no learned coefficients: the
stance ankle is passive and the swing ankle reference comes from the ankle
regulator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NUM_JOINTS = 10
NUM_LEARNED_JOINTS = 8
COEFFS_PER_JOINT = 4          # alpha[1..4]; alpha[0] and alpha[5] are anchored
NUM_COEFF_CHANNELS = NUM_LEARNED_JOINTS * COEFFS_PER_JOINT
NUM_KD = 5
NUM_KFP = 4
NUM_KT = 4
NUM_CHANNELS = NUM_COEFF_CHANNELS + NUM_KD + NUM_KFP + NUM_KT
assert NUM_CHANNELS == 45

# Physical columns of the 8 learned joints, in decoder (stance-first) order.
LEARNED_COLUMNS = (0, 1, 2, 3, 5, 6, 7, 8)
ANKLE_COLUMNS = (4, 9)

JOINT_NAMES = (
    "r_hip_roll", "r_hip_yaw", "r_hip_pitch", "r_knee", "r_ankle",
    "l_hip_roll", "l_hip_yaw", "l_hip_pitch", "l_knee", "l_ankle",
)

# Left/right permutation with sign negation on hip roll and yaw: lateral
# mirror symmetry of the gait. T is symmetric and involutive (T @ T = I).
_MIRROR_PERM = np.array([5, 6, 7, 8, 9, 0, 1, 2, 3, 4])
_MIRROR_SIGN = np.array([-1.0, -1.0, 1.0, 1.0, 1.0, -1.0, -1.0, 1.0, 1.0, 1.0])

DEFAULT_SYMMETRY_PERMUTATION = tuple(int(p) for p in _MIRROR_PERM)
DEFAULT_SYMMETRY_SIGNS = tuple(float(s) for s in _MIRROR_SIGN)


def validate_symmetry_table(perm, signs) -> tuple[np.ndarray, np.ndarray]:
    """Check that (perm, signs) define a valid signed involution.

    The decode path relies on T being symmetric and involutive: the
    permutation must be self-inverse and paired entries must share a sign.
    """
    perm = np.asarray(perm, dtype=int)
    signs = np.asarray(signs, dtype=float)
    if perm.shape != (NUM_JOINTS,) or signs.shape != (NUM_JOINTS,):
        raise ValueError(f"symmetry table needs {NUM_JOINTS} permutation and sign entries")
    if sorted(perm.tolist()) != list(range(NUM_JOINTS)):
        raise ValueError("symmetry permutation must be a permutation of 0..9")
    if not np.all(np.isin(signs, (-1.0, 1.0))):
        raise ValueError("symmetry signs must all be -1 or 1")
    for j in range(NUM_JOINTS):
        if perm[perm[j]] != j:
            raise ValueError("symmetry permutation must be an involution")
        if signs[perm[j]] * signs[j] != 1.0:
            raise ValueError("paired joints must share a symmetry sign (so T @ T = I)")
    if {int(perm[c]) for c in ANKLE_COLUMNS} != set(ANKLE_COLUMNS):
        raise ValueError("symmetry must pair ankle columns with ankle columns")
    return perm, signs


def symmetry_matrix(perm=None, signs=None) -> np.ndarray:
    """The 10x10 right/left symmetry matrix T with alpha_L = alpha_R @ T."""
    if perm is None and signs is None:
        perm, signs = _MIRROR_PERM, _MIRROR_SIGN
    else:
        perm, signs = validate_symmetry_table(perm, signs)
    T = np.zeros((NUM_JOINTS, NUM_JOINTS))
    for j in range(NUM_JOINTS):
        T[perm[j], j] = signs[j]
    return T


def mirror(alpha_r: np.ndarray, T: np.ndarray | None = None) -> np.ndarray:
    """Left-stance coefficients alpha_L = alpha_R @ T."""
    alpha_r = np.asarray(alpha_r, dtype=float)
    if alpha_r.shape != (6, NUM_JOINTS):
        raise ValueError(f"expected (6, {NUM_JOINTS}) matrix, got {alpha_r.shape}")
    if T is not None:
        return alpha_r @ T
    # Column permutation with signs; identical to the matrix product.
    return alpha_r[:, _MIRROR_PERM] * _MIRROR_SIGN


def mirror_joint_vector(q: np.ndarray, perm=None, signs=None) -> np.ndarray:
    """Apply the symmetry transform to a 10-vector of joint values."""
    q = np.asarray(q, dtype=float)
    if q.shape != (NUM_JOINTS,):
        raise ValueError(f"expected ({NUM_JOINTS},) vector, got {q.shape}")
    if perm is None:
        perm, signs = _MIRROR_PERM, _MIRROR_SIGN
    return q[perm] * signs


@dataclass(frozen=True)
class ActionBounds:
    """Per-channel (min, max) pairs for the 45 raw action channels."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != (NUM_CHANNELS,) or hi.shape != (NUM_CHANNELS,):
            raise ValueError(f"bounds must have shape ({NUM_CHANNELS},)")
        if not np.all(lo < hi):
            bad = int(np.argmin(hi - lo))
            raise ValueError(f"channel {bad}: min {lo[bad]} must be < max {hi[bad]}")

    def coefficient_bounds(self, learned_joint: int) -> tuple[float, float]:
        """Shared (min, max) of the 4 coefficient channels of one joint."""
        c = learned_joint * COEFFS_PER_JOINT
        return float(self.lo[c]), float(self.hi[c])


@dataclass(frozen=True)
class GaitParameters:
    """Decoded action: both stance coefficient matrices plus all gains.

    kd holds the per-joint-type derivative gains [hip-roll, hip-yaw,
    hip-pitch, knee, ankle], shared between legs. kfp is
    [K_px, K_dx, K_py, K_dy], kt is [K_p_troll, K_d_troll, K_p_tpitch,
    K_d_tpitch].
    """

    alpha_r: np.ndarray
    alpha_l: np.ndarray
    kd: np.ndarray
    kfp: np.ndarray
    kt: np.ndarray

    def kd_per_joint(self) -> np.ndarray:
        """Derivative gains expanded to the 10 physical joints."""
        return np.concatenate([self.kd, self.kd])


def check_raw_action(raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (NUM_CHANNELS,):
        raise ValueError(f"raw action must have shape ({NUM_CHANNELS},), got {raw.shape}")
    if not (raw.min() > 0.0 and raw.max() < 1.0):
        raise ValueError("raw action entries must lie strictly inside (0, 1)")
    return raw


def scale(raw: np.ndarray, bounds: ActionBounds) -> np.ndarray:
    """Map each raw channel linearly onto [min, max]: 0 to min, 1 to max.

    Strict (0, 1) membership is the caller's contract (the sigmoid output
    layer guarantees it); the map itself is well defined on the closure.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (NUM_CHANNELS,):
        raise ValueError(f"raw action must have shape ({NUM_CHANNELS},), got {raw.shape}")
    return bounds.lo + raw * (bounds.hi - bounds.lo)


def assemble(scaled: np.ndarray, q_measured: np.ndarray) -> GaitParameters:
    """Build full gait parameters from scaled channels and step-start joints.

    q_measured holds the 8 learned joint positions at tau = 0 in decoder
    order. Impact anchoring and step periodicity pin alpha[0] = alpha[5] =
    q_measured for every learned column; the free alpha[1..4] come from the
    coefficient channels, four per joint. Ankle columns stay zero and are
    never used for tracking.
    """
    scaled = np.asarray(scaled, dtype=float)
    if scaled.shape != (NUM_CHANNELS,):
        raise ValueError(f"expected ({NUM_CHANNELS},) scaled vector, got {scaled.shape}")
    q_measured = np.asarray(q_measured, dtype=float)
    if q_measured.shape != (NUM_LEARNED_JOINTS,):
        raise ValueError(
            f"q_measured must have shape ({NUM_LEARNED_JOINTS},), got {q_measured.shape}"
        )

    alpha_r = np.zeros((6, NUM_JOINTS))
    free = scaled[:NUM_COEFF_CHANNELS].reshape(NUM_LEARNED_JOINTS, COEFFS_PER_JOINT)
    cols = np.array(LEARNED_COLUMNS)
    alpha_r[0, cols] = q_measured
    alpha_r[5, cols] = q_measured
    alpha_r[1:5, cols] = free.T

    k0 = NUM_COEFF_CHANNELS
    return GaitParameters(
        alpha_r=alpha_r,
        alpha_l=mirror(alpha_r),
        kd=scaled[k0:k0 + NUM_KD].copy(),
        kfp=scaled[k0 + NUM_KD:k0 + NUM_KD + NUM_KFP].copy(),
        kt=scaled[k0 + NUM_KD + NUM_KFP:].copy(),
    )


class ActionDecoder:
    """Bounds plus symmetry table, immutable after construction."""

    def __init__(self, bounds: ActionBounds, perm=None, signs=None):
        self.bounds = bounds
        if perm is None and signs is None:
            self.perm = _MIRROR_PERM.copy()
            self.signs = _MIRROR_SIGN.copy()
        else:
            self.perm, self.signs = validate_symmetry_table(perm, signs)
        self.T = symmetry_matrix(self.perm, self.signs)

    def decode(self, raw: np.ndarray, q_measured: np.ndarray) -> GaitParameters:
        scaled = scale(raw, self.bounds)
        params = assemble(scaled, q_measured)
        return GaitParameters(
            alpha_r=params.alpha_r,
            alpha_l=params.alpha_r[:, self.perm] * self.signs,
            kd=params.kd,
            kfp=params.kfp,
            kt=params.kt,
        )
