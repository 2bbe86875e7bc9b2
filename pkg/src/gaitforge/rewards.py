"""Episodic reward stack: eight clamped components and early termination.

Component order is fixed: [r_vx, r_vy, r_h, r_u, r_com, r_ang, r_angvel,
r_fd]. Every component is clamped to [-1, 1] before weighting so no single
term can run away with the total. Where a raw formula has a pole, the
component returns the clamp bound with the sign of the approaching branch.

Note on the feet-separation termination: episodes end when the feet come
CLOSER than 0.05 m. Keeping the feet apart is the only reading consistent
with the foot-distance reward, which favors separations in [0.2, 0.4] m.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WEIGHTS = np.array([0.8, 0.2, 0.1, 0.01, 0.1, 0.5, 0.5, 5.0])

COMPONENT_NAMES = ("r_vx", "r_vy", "r_h", "r_u", "r_com", "r_ang", "r_angvel", "r_fd")

# Termination thresholds.
MAX_TORSO_ANGLE = 0.5        # rad, each of yaw/pitch/roll
MIN_PELVIS_HEIGHT = 0.75     # m
MAX_PELVIS_HEIGHT = 1.1      # m
MIN_FEET_DISTANCE = 0.05     # m


def _clamp(x: float) -> float:
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


def reward_velocity(v_avg: float, v_des: float) -> float:
    """Speed tracking: sharply rewarding inside a 0.1 m/s error band.

    e = v_avg - v_des. Inside the band the reward is 1e-3 / (e + 1e-5)^2,
    outside it is -1e-3 / e^2, both clamped. The offset in the inner
    branch shifts the pole to e = -1e-5; that exact input returns the
    positive clamp bound.
    """
    e = v_avg - v_des
    if abs(e) <= 0.1:
        denom = e + 1e-5
        if denom == 0.0:
            return 1.0
        return _clamp(1e-3 / (denom * denom))
    return _clamp(-1e-3 / (e * e))


def reward_height(p_z: float, p_z_des: float) -> float:
    """Height maintenance around the desired pelvis height."""
    if p_z <= 0.0 or p_z_des <= 0.0:
        raise ValueError(f"heights must be positive, got p_z={p_z}, p_z_des={p_z_des}")
    if abs(p_z - p_z_des) <= 0.05:
        if p_z <= p_z_des:
            ratio = p_z / p_z_des
        else:
            ratio = p_z_des / p_z
        return _clamp(ratio * ratio)
    diff = p_z - p_z_des
    return _clamp(-diff * diff)


def reward_energy(u_norm: np.ndarray) -> float:
    """Torque penalty -||u||^2 on torques normalized by per-joint limits."""
    u = np.asarray(u_norm, dtype=float)
    return _clamp(-float(np.dot(u, u)))


def point_in_convex_polygon(point: np.ndarray, vertices: np.ndarray) -> bool:
    """Convex containment with the boundary counted as inside.

    Works for either vertex winding; degenerate (collinear) polygons count
    a point as inside only if it lies on the segment hull.
    """
    px, py = float(point[0]), float(point[1])
    verts = np.asarray(vertices, dtype=float)
    n = len(verts)
    if n < 3:
        raise ValueError("polygon needs at least 3 vertices")
    has_pos = False
    has_neg = False
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        if cross > 0.0:
            has_pos = True
        elif cross < 0.0:
            has_neg = True
        if has_pos and has_neg:
            return False
    return True


def reward_com(
    com_xy: np.ndarray, polygon: np.ndarray, d: float, inside: bool | None = None
) -> float:
    """Support-polygon reward on the CoM ground projection.

    d is the ground-plane distance from the CoM projection to the polygon
    center. Inside the polygon the reward is 0.01/d (capped at 1 as d
    shrinks); outside it is -100/(d - 0.1), which approaches the negative
    clamp bound as d nears 0.1 from above, so the whole region d <= 0.1
    outside the polygon returns -1. Callers that already know the
    containment result (e.g. for an axis-aligned footprint) may pass it
    as `inside` to skip the generic test.
    """
    if d < 0.0:
        raise ValueError(f"d must be >= 0, got {d}")
    if inside is None:
        inside = point_in_convex_polygon(com_xy, polygon)
    if inside:
        if d == 0.0:
            return 1.0
        return _clamp(0.01 / d)
    if d <= 0.1:
        return -1.0
    return _clamp(-100.0 / (d - 0.1))


def reward_posture(angles: np.ndarray, rates: np.ndarray) -> tuple[float, float]:
    """Quadratic penalties on torso angles and angular rates."""
    a = np.asarray(angles, dtype=float)
    r = np.asarray(rates, dtype=float)
    r_ang = _clamp(-float(np.dot(a, a)))
    r_angvel = _clamp(-float(np.dot(r, r)))
    return r_ang, r_angvel


def reward_foot_distance(d_feet: float) -> float:
    """Zero inside the nominal 0.2-0.4 m band, quadratic penalty outside."""
    if d_feet < 0.0:
        raise ValueError(f"d_feet must be >= 0, got {d_feet}")
    if d_feet > 0.4:
        e = d_feet - 0.4
    elif d_feet < 0.2:
        e = d_feet - 0.2
    else:
        return 0.0
    return _clamp(-e * e)


@dataclass(frozen=True)
class RewardInputs:
    """Everything the reward stack consumes for one control step."""

    v_x_avg: float
    v_y_avg: float
    v_x_des: float
    v_y_des: float
    p_z: float
    p_z_des: float
    u_norm: np.ndarray
    com_xy: np.ndarray
    support_polygon: np.ndarray
    d: float
    angles: np.ndarray
    rates: np.ndarray
    d_feet: float


@dataclass(frozen=True)
class RewardVector:
    components: np.ndarray
    total: float


def compute(inputs: RewardInputs, com_inside: bool | None = None) -> RewardVector:
    """All eight components plus the weighted total."""
    r_ang, r_angvel = reward_posture(inputs.angles, inputs.rates)
    components = np.array(
        [
            reward_velocity(inputs.v_x_avg, inputs.v_x_des),
            reward_velocity(inputs.v_y_avg, inputs.v_y_des),
            reward_height(inputs.p_z, inputs.p_z_des),
            reward_energy(inputs.u_norm),
            reward_com(inputs.com_xy, inputs.support_polygon, inputs.d, com_inside),
            r_ang,
            r_angvel,
            reward_foot_distance(inputs.d_feet),
        ]
    )
    return RewardVector(components=components, total=float(np.dot(WEIGHTS, components)))


def total(components: np.ndarray) -> float:
    """Weighted sum of an already-clamped component vector."""
    components = np.asarray(components, dtype=float)
    if components.shape != (8,):
        raise ValueError(f"expected 8 components, got {components.shape}")
    return float(np.dot(WEIGHTS, components))


@dataclass(frozen=True)
class TerminationState:
    yaw: float
    pitch: float
    roll: float
    p_z: float
    feet_distance: float


def terminated(state: TerminationState) -> bool:
    """True when any torso angle, pelvis height, or feet bound is violated."""
    return (
        abs(state.yaw) >= MAX_TORSO_ANGLE
        or abs(state.pitch) >= MAX_TORSO_ANGLE
        or abs(state.roll) >= MAX_TORSO_ANGLE
        or state.p_z <= MIN_PELVIS_HEIGHT
        or state.p_z >= MAX_PELVIS_HEIGHT
        or state.feet_distance <= MIN_FEET_DISTANCE
    )
