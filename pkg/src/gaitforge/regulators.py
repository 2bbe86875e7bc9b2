"""Heuristic feedback regulation: foot placement, torso, and ankles.

These are the fixed-structure compensations layered on top of Bezier
trajectory tracking. Foot placement shifts the swing hip targets once per
step based on average speed; torso regulation adds feed-forward torque on
the stance hip; ankle regulation keeps the swing foot flat and leaves the
stance ankle passive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Swing ankle pitch offset: 13 deg of foot geometry plus 50 deg of shin
# mount angle. The 13 deg piece is robot specific and configurable.
DEFAULT_FOOT_GEOMETRY_DEG = 13.0
DEFAULT_SHIN_MOUNT_DEG = 50.0


@dataclass(frozen=True)
class SpeedSample:
    """Average speed at the middle of the current and previous step."""

    v_now: float
    v_prev: float
    v_desired: float


def foot_placement(sample: SpeedSample, k_p: float, k_d: float) -> float:
    """Per-step target offset for a swing hip joint, in radians.

    delta = K_p (v[k] - v_d) + K_d (v[k] - v[k-1]). The longitudinal
    channel feeds the swing hip pitch, the lateral channel the swing hip
    roll.
    """
    return k_p * (sample.v_now - sample.v_desired) + k_d * (sample.v_now - sample.v_prev)


def torso_torque(
    angle: float,
    rate: float,
    k_p: float,
    k_d: float,
    desired_angle: float = 0.0,
    desired_rate: float = 0.0,
) -> float:
    """PD feed-forward torque keeping the torso upright.

    u = K_p (angle - angle_d) + K_d (rate - rate_d), applied to the stance
    hip roll (roll channel) or stance hip pitch (pitch channel).
    """
    return k_p * (angle - desired_angle) + k_d * (rate - desired_rate)


def swing_ankle_reference(
    torso_pitch: float,
    foot_geometry_deg: float = DEFAULT_FOOT_GEOMETRY_DEG,
    shin_mount_deg: float = DEFAULT_SHIN_MOUNT_DEG,
) -> float:
    """Swing ankle pitch reference keeping the swing foot flat.

    gamma_sw = torso_pitch - (13 deg + 50 deg), in radians.
    """
    return torso_pitch - math.radians(foot_geometry_deg + shin_mount_deg)


class FootPlacementState:
    """Per-episode speed history behind the once-per-step delta refresh.

    Offsets refresh once per step when tau crosses 0.5 and then hold, so
    the swing reference never jumps more than once per step. The
    longitudinal speed sample averages over the half-step window ending
    at the refresh. The lateral sample instead averages over the previous
    full walking step (switch to switch): a half-step lateral average
    alternates sign with the natural sway cycle even on a perfect gait,
    and through the impact anchoring that alternation ratchets the feet
    together; the full-step displacement is zero on a symmetric cycle and
    isolates genuine lateral drift.
    """

    def __init__(self) -> None:
        self.delta_x = 0.0
        self.delta_y = 0.0
        self.v_prev_x = 0.0
        self.v_prev_y = 0.0
        self._x0 = 0.0
        self._t0 = 0.0
        self._boundaries: list[tuple[float, float]] = []
        self._armed = False

    def start_episode(self, x: float, y: float, t: float) -> None:
        """Reset history; no refresh happens during the first step."""
        self.delta_x = 0.0
        self.delta_y = 0.0
        self.v_prev_x = 0.0
        self.v_prev_y = 0.0
        self._x0 = x
        self._t0 = t
        self._boundaries = [(t, y)]
        self._armed = False

    def start_step(self, x: float, y: float, t: float) -> None:
        """Record a stance switch and open the next measurement window."""
        self._boundaries.append((t, y))
        if len(self._boundaries) > 2:
            self._boundaries.pop(0)
        self._x0 = x
        self._t0 = t
        self._armed = True

    def maybe_refresh(
        self,
        tau: float,
        x: float,
        t: float,
        v_desired: tuple[float, float],
        kfp: np.ndarray,
    ) -> None:
        """Refresh the held offsets the first time tau crosses 0.5."""
        if not self._armed or tau < 0.5:
            return
        self._armed = False
        dt = t - self._t0
        if dt <= 0.0:
            return
        v_x = (x - self._x0) / dt
        (t1, y1), (t2, y2) = self._boundaries[-2], self._boundaries[-1]
        v_y = (y2 - y1) / (t2 - t1) if t2 > t1 else 0.0
        self.delta_x = foot_placement(
            SpeedSample(v_x, self.v_prev_x, v_desired[0]), kfp[0], kfp[1]
        )
        self.delta_y = foot_placement(
            SpeedSample(v_y, self.v_prev_y, v_desired[1]), kfp[2], kfp[3]
        )
        self.v_prev_x = v_x
        self.v_prev_y = v_y
