"""Reduced-order 3D biped surrogate with the reset/step/push contract.

The surrogate couples four cheap sub-models instead of full rigid-body
physics:

  * joints    - ten independent damped double integrators driven by PD
                tracking torque, clamped at mechanical limits;
  * legs      - kinematic chains (hip roll/yaw/pitch, knee, ankle) whose
                forward kinematics give foot positions, pelvis height
                above the stance foot, and the feet separation;
  * CoM       - a 3D linear inverted pendulum about the stance foot for
                the horizontal pelvis motion (plus external push forces);
  * torso     - second-order roll/pitch/yaw driven by the regulation
                torques and a gravity-lean coupling proportional to the
                CoM offset from the pivot.

Stance switches exactly when the phase reaches 1: the swing foot is
planted at its forward-kinematics position, roles swap, and the Bezier
anchors are re-measured. Everything is deterministic per seed and runs on
a fixed 1 kHz control tick with two 0.5 ms integration substeps.

Joint vector layout (10):
  [0..4]  right leg: hip roll, hip yaw, hip pitch, knee, ankle
  [5..9]  left  leg: same order

Positive hip pitch moves the foot forward (+x); positive hip roll moves
it to the left (+y) for both legs; knee flexion is negative with 0 =
straight leg.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rewards
from .bezier import PhaseClock, bernstein_pair_into, phase
from .decoder import (
    LEARNED_COLUMNS,
    NUM_COEFF_CHANNELS,
    NUM_KD,
    NUM_KFP,
    ActionDecoder,
    GaitParameters,
    check_raw_action,
    mirror_joint_vector,
)
from .policy import OBS_DIM
from .regulators import FootPlacementState, swing_ankle_reference, torso_torque

RIGHT, LEFT = 0, 1
STANCE_NAMES = ("right", "left")

# Role index tables: (stance hip-roll, stance hip-pitch, stance ankle,
#                     swing hip-roll, swing hip-pitch, swing ankle)
_ROLE_IDX = {
    RIGHT: (0, 2, 4, 5, 7, 9),
    LEFT: (5, 7, 9, 0, 2, 4),
}

_LEARNED = np.array(LEARNED_COLUMNS)


def _per_joint(values5) -> np.ndarray:
    """Expand a per-joint-type 5-vector to both legs."""
    a = np.asarray(values5, dtype=float)
    if a.shape != (5,):
        raise ValueError(f"expected 5 per-joint-type values, got {a.shape}")
    return np.concatenate([a, a])


@dataclass(frozen=True)
class EnvParams:
    """Surrogate constants; sized for a ~31 kg biped, all overridable."""

    gravity: float = 9.81
    mass: float = 31.0
    nominal_height: float = 0.95
    thigh_length: float = 0.5
    shin_length: float = 0.5
    hip_spacing: float = 0.3
    foot_length: float = 0.16
    foot_width: float = 0.04
    com_offset: tuple[float, float, float] = (0.0, 0.0, 0.1)
    t_step: float = 0.35
    control_dt: float = 0.001
    substeps: int = 2
    max_ticks: int = 10000
    # per joint type: hip roll, hip yaw, hip pitch, knee, ankle
    kp_joint: tuple[float, ...] = (300.0, 200.0, 300.0, 300.0, 60.0)
    joint_inertia: tuple[float, ...] = (0.25, 0.2, 0.3, 0.25, 0.05)
    joint_damping: tuple[float, ...] = (2.0, 2.0, 2.0, 2.0, 0.5)
    torque_limit: tuple[float, ...] = (120.0, 80.0, 150.0, 150.0, 30.0)
    joint_lower: tuple[float, ...] = (-0.4, -0.4, -0.9, -1.8, -2.0)
    joint_upper: tuple[float, ...] = (0.4, 0.4, 1.2, -0.05, 0.5)
    nominal_pose: tuple[float, ...] = (0.0, 0.0, 0.3, -0.6, -1.0995574287564276)
    torso_inertia: tuple[float, float, float] = (4.0, 4.0, 2.0)
    torso_damping: tuple[float, float, float] = (1.5, 1.5, 1.0)
    lean_gain_roll: float = 50.0
    lean_gain_pitch: float = 50.0
    # saturation on the applied foot-placement offsets; the regulation law
    # itself is unclamped, but a swing target thrown half a radian by one
    # bad speed sample would plant the leg in a height-violating posture
    fp_delta_limit: float = 0.35
    reset_jitter: float = 0.01
    p_z_des: float = 0.95
    v_x_range: tuple[float, float] = (-0.5, 1.0)
    v_y_range: tuple[float, float] = (-0.3, 0.3)
    initial_stance: int = RIGHT

    def __post_init__(self) -> None:
        if self.t_step <= 0 or self.control_dt <= 0 or self.substeps < 1:
            raise ValueError("t_step, control_dt and substeps must be positive")
        lo, hi = np.asarray(self.joint_lower), np.asarray(self.joint_upper)
        if not np.all(lo < hi):
            raise ValueError("joint_lower must be < joint_upper for every type")
        pose = np.asarray(self.nominal_pose)
        if not (np.all(pose >= lo) and np.all(pose <= hi)):
            raise ValueError("nominal_pose must lie within the joint limits")


@dataclass(frozen=True)
class PushEvent:
    """External pelvis force window."""

    start: float
    duration: float
    force_x: float
    force_y: float = 0.0

    def __post_init__(self) -> None:
        if self.duration <= 0.0:
            raise ValueError(f"push duration must be > 0, got {self.duration}")


@dataclass(frozen=True)
class SimState:
    """Full surrogate state snapshot (for traces and tests)."""

    time: float
    tick: int
    tau: float
    stance: int
    step_index: int
    pelvis_pos: np.ndarray
    pelvis_vel: np.ndarray
    torso_angles: np.ndarray
    torso_rates: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    stance_foot: np.ndarray
    v_avg: np.ndarray
    push_force: np.ndarray


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: rewards.RewardVector
    terminated: bool
    aux: rewards.RewardInputs


def _foot_floats(
    roll: float, yaw: float, pitch: float, knee: float,
    lt: float, ls: float, hip_y: float,
) -> tuple[float, float, float]:
    """Foot point relative to the pelvis (scalar math, hot path)."""
    shin_pitch = pitch + knee
    # sagittal-plane chain
    vx = lt * math.sin(pitch) + ls * math.sin(shin_pitch)
    vz = -lt * math.cos(pitch) - ls * math.cos(shin_pitch)
    # roll about x
    vy = -vz * math.sin(roll)
    vz = vz * math.cos(roll)
    # yaw about z
    cy, sy = math.cos(yaw), math.sin(yaw)
    return (vx * cy - vy * sy, hip_y + vx * sy + vy * cy, vz)


def leg_foot_position(q_leg: np.ndarray, params: EnvParams, side: int) -> np.ndarray:
    """Foot point relative to the pelvis for one leg.

    q_leg = (hip roll, hip yaw, hip pitch, knee, ankle); the ankle angle
    orients the foot body and does not move the foot point.
    """
    hip_y = -0.5 * params.hip_spacing if side == RIGHT else 0.5 * params.hip_spacing
    return np.array(
        _foot_floats(
            float(q_leg[0]), float(q_leg[1]), float(q_leg[2]), float(q_leg[3]),
            params.thigh_length, params.shin_length, hip_y,
        )
    )


class BipedEnv:
    """Deterministic surrogate implementing the environment contract.

    One instance is single threaded and owned by one evaluation worker;
    run many instances for parallelism.
    """

    def __init__(
        self,
        params: EnvParams,
        decoder: ActionDecoder,
        push_events: list[PushEvent] | None = None,
    ):
        self.params = params
        self.decoder = decoder
        self.push_events: list[PushEvent] = list(push_events or [])

        self._kp = _per_joint(params.kp_joint)
        self._inertia = _per_joint(params.joint_inertia)
        self._damping = _per_joint(params.joint_damping)
        self._tau_limit = _per_joint(params.torque_limit)
        self._q_lo = _per_joint(params.joint_lower)
        self._q_hi = _per_joint(params.joint_upper)
        self._nominal = _per_joint(params.nominal_pose)
        self._omega_sq = params.gravity / params.nominal_height
        self._dt_sub = params.control_dt / params.substeps

        half_l = 0.5 * params.foot_length
        half_w = 0.5 * params.foot_width
        self._half_l = half_l
        self._half_w = half_w
        self._foot_rect = np.array(
            [[half_l, half_w], [-half_l, half_w], [-half_l, -half_w], [half_l, -half_w]]
        )

        # Hot-path buffers and routing tables. The decode inside step()
        # writes only the active stance matrix: anchors are physical joint
        # positions either way, and the mirror reduces to a signed column
        # permutation of the free coefficients (exactly equal to running
        # assemble() + mirror(); tests pin the equivalence).
        learned = np.array(LEARNED_COLUMNS)
        self._anchor_cols = learned
        perm, signs = decoder.perm, decoder.signs
        self._route_cols = {
            RIGHT: learned,
            LEFT: perm[learned],
        }
        self._route_signs = {
            RIGHT: np.ones(len(learned)),
            LEFT: signs[perm[learned]].copy(),
        }
        self._scaled = np.empty(45)
        self._span = None  # filled lazily from decoder bounds
        self._alpha = np.zeros((6, 10))
        self._kd10 = np.empty(10)
        self._qdes_pair = np.empty((2, 6))
        self._u = np.empty(10)
        self._joint_buf = np.empty(10)
        self._started = False
        self._terminated = True

    # ------------------------------------------------------------------
    # episode control

    def reset(self, seed: int, v_desired: tuple[float, float]) -> np.ndarray:
        p = self.params
        vx, vy = float(v_desired[0]), float(v_desired[1])
        if not (p.v_x_range[0] <= vx <= p.v_x_range[1]):
            raise ValueError(f"v_x command {vx} outside {p.v_x_range}")
        if not (p.v_y_range[0] <= vy <= p.v_y_range[1]):
            raise ValueError(f"v_y command {vy} outside {p.v_y_range}")
        self.v_des = (vx, vy)

        rng = np.random.default_rng(seed)
        jitter = rng.uniform(-p.reset_jitter, p.reset_jitter, 10) if p.reset_jitter > 0 else np.zeros(10)
        self.q = np.clip(self._nominal + jitter, self._q_lo, self._q_hi)
        self.qd = np.zeros(10)

        self.stance = p.initial_stance
        self.x = 0.0
        self.y = 0.0
        self.vx = 0.0
        self.vy = 0.0
        self.angles = np.zeros(3)        # roll, pitch, yaw
        self.rates = np.zeros(3)
        self.tick = 0
        self.step_index = 0
        # Reset lands mid-stance (tau = 0.5): a stand-still state with zero
        # velocity is closest to the lateral sway apex of a walking cycle,
        # so the first half step eases into the limit cycle instead of
        # launching a full-amplitude sway from rest.
        self.clock = PhaseClock(-0.5 * p.t_step, p.t_step)
        self._pz_prev = self._stance_height()
        self._vz = 0.0

        foot = leg_foot_position(self._stance_leg_q(), p, self.stance)
        self.pivot = np.array([self.x + foot[0], self.y + foot[1]])

        self.fp = FootPlacementState()
        self.fp.start_episode(self.x, self.y, 0.0)
        self._step_start_t = 0.0
        self._step_start_xy = (self.x, self.y)
        self._v_avg = np.zeros(2)
        self._anchor_phys = self.q[self._anchor_cols].copy()
        self._com_inside = False
        self._push_now = np.zeros(2)
        self._terminated = False
        self._started = True
        return self._observation()

    def apply_push(self, event: PushEvent) -> None:
        if not self._started or self._terminated:
            raise ValueError("apply_push requires a running episode")
        self.push_events.append(event)

    # ------------------------------------------------------------------
    # stepping

    def step(self, raw_action: np.ndarray) -> StepResult:
        """Advance one 1 ms control tick under the decoded policy action."""
        if self._terminated:
            raise ValueError("episode has terminated; call reset() first")
        raw = check_raw_action(raw_action)
        bounds = self.decoder.bounds
        if self._span is None:
            self._span = bounds.hi - bounds.lo
        scaled = self._scaled
        np.multiply(raw, self._span, out=scaled)
        scaled += bounds.lo

        # Fast decode: fill only the active stance matrix. Anchors are the
        # physical step-start joint positions; free coefficients route
        # through the signed mirror permutation when the left leg stances.
        alpha = self._alpha
        cols = self._route_cols[self.stance]
        signs = self._route_signs[self.stance]
        free = scaled[:NUM_COEFF_CHANNELS].reshape(8, 4)
        alpha[0, self._anchor_cols] = self._anchor_phys
        alpha[5, self._anchor_cols] = self._anchor_phys
        alpha[1:5, cols] = free.T * signs

        kd10 = self._kd10
        kd10[:5] = scaled[NUM_COEFF_CHANNELS:NUM_COEFF_CHANNELS + NUM_KD]
        kd10[5:] = kd10[:5]
        kfp = scaled[NUM_COEFF_CHANNELS + NUM_KD:NUM_COEFF_CHANNELS + NUM_KD + NUM_KFP]
        kt = scaled[NUM_COEFF_CHANNELS + NUM_KD + NUM_KFP:]
        return self._advance(alpha, kd10, kfp, kt)

    def step_gait(self, gait: GaitParameters) -> StepResult:
        """Advance one tick from already-decoded gait parameters."""
        if self._terminated:
            raise ValueError("episode has terminated; call reset() first")
        active = gait.alpha_r if self.stance == RIGHT else gait.alpha_l
        return self._advance(active, gait.kd_per_joint(), gait.kfp, gait.kt)

    def _advance(
        self, active: np.ndarray, kd10: np.ndarray, kfp: np.ndarray, kt: np.ndarray
    ) -> StepResult:
        p = self.params
        st_hr, st_hp, st_ankle, sw_hr, sw_hp, sw_ankle = _ROLE_IDX[self.stance]

        t = self.tick * p.control_dt
        tau_now = phase(self.clock, t)
        self.fp.maybe_refresh(tau_now, self.x, t, self.v_des, kfp)

        lim = p.fp_delta_limit
        delta_x = min(max(self.fp.delta_x, -lim), lim)
        delta_y = min(max(self.fp.delta_y, -lim), lim)

        u_sum = np.zeros(10)
        u = self._u
        des = self._qdes_pair
        inv_t_step = 1.0 / p.t_step
        for s in range(p.substeps):
            t_sub = t + s * self._dt_sub
            tau = phase(self.clock, t_sub)
            bernstein_pair_into(tau, des)
            qdes = des @ active
            q_des, qd_des = qdes[0], qdes[1]
            qd_des *= inv_t_step

            q_des[sw_hp] += delta_x
            q_des[sw_hr] += delta_y
            q_des[sw_ankle] = swing_ankle_reference(self.angles[1])
            qd_des[sw_ankle] = self.rates[1]

            q_des -= self.q
            q_des *= self._kp
            qd_des -= self.qd
            qd_des *= kd10
            np.add(q_des, qd_des, out=u)
            u_troll = torso_torque(self.angles[0], self.rates[0], kt[0], kt[1])
            u_tpitch = torso_torque(self.angles[1], self.rates[1], kt[2], kt[3])
            u[st_hr] += u_troll
            u[st_hp] += u_tpitch
            u[st_ankle] = 0.0
            np.clip(u, -self._tau_limit, self._tau_limit, out=u)
            u_sum += u

            self._integrate_joints(u)
            self._integrate_body(t_sub, u_troll, u_tpitch)

        self.tick += 1
        t_end = self.tick * p.control_dt
        if phase(self.clock, t_end) >= 1.0:
            self._switch_stance(t_end)
        self._update_velocity_average(t_end)

        u_mean = u_sum / p.substeps
        aux = self._reward_inputs(u_mean)
        reward = rewards.compute(aux, com_inside=self._com_inside)
        done = rewards.terminated(
            rewards.TerminationState(
                yaw=self.angles[2],
                pitch=self.angles[1],
                roll=self.angles[0],
                p_z=aux.p_z,
                feet_distance=aux.d_feet,
            )
        ) or self.tick >= p.max_ticks
        self._terminated = done
        return StepResult(self._observation(), reward, done, aux)

    def step_torques(self, u: np.ndarray) -> None:
        """Low-level tick under a fixed torque vector (no control pipeline).

        Performs the same substep integration as step() without decoding,
        regulation, reward, or stance switching; dynamics tests drive the
        surrogate through this, and a torque-mode bridge backend could.
        """
        if self._terminated:
            raise ValueError("episode has terminated; call reset() first")
        u = np.asarray(u, dtype=float)
        t = self.tick * self.params.control_dt
        for s in range(self.params.substeps):
            u_clipped = np.clip(u, -self._tau_limit, self._tau_limit)
            self._integrate_joints(u_clipped)
            self._integrate_body(t + s * self._dt_sub, 0.0, 0.0)
        self.tick += 1

    # ------------------------------------------------------------------
    # internals

    def _integrate_joints(self, u: np.ndarray) -> None:
        dt = self._dt_sub
        acc = self._joint_buf
        np.multiply(self._damping, self.qd, out=acc)
        np.subtract(u, acc, out=acc)
        acc /= self._inertia
        acc *= dt
        self.qd += acc
        self.q += dt * self.qd
        below = self.q < self._q_lo
        above = self.q > self._q_hi
        if below.any() or above.any():
            np.clip(self.q, self._q_lo, self._q_hi, out=self.q)
            self.qd[below | above] = 0.0

    def _integrate_body(self, t_sub: float, u_troll: float, u_tpitch: float) -> None:
        p = self.params
        dt = self._dt_sub
        fx, fy = self._push_force(t_sub)
        self._push_now = np.array([fx, fy])

        ax = self._omega_sq * (self.x - self.pivot[0]) + fx / p.mass
        ay = self._omega_sq * (self.y - self.pivot[1]) + fy / p.mass
        self.vx += dt * ax
        self.vy += dt * ay
        self.x += dt * self.vx
        self.y += dt * self.vy

        com_dx = self.x + p.com_offset[0] - self.pivot[0]
        com_dy = self.y + p.com_offset[1] - self.pivot[1]
        i_r, i_p, i_y = p.torso_inertia
        c_r, c_p, c_y = p.torso_damping
        acc_roll = (-u_troll - c_r * self.rates[0] + p.lean_gain_roll * com_dy) / i_r
        acc_pitch = (-u_tpitch - c_p * self.rates[1] + p.lean_gain_pitch * com_dx) / i_p
        acc_yaw = (-c_y * self.rates[2]) / i_y
        self.rates[0] += dt * acc_roll
        self.rates[1] += dt * acc_pitch
        self.rates[2] += dt * acc_yaw
        self.angles += dt * self.rates

    def _push_force(self, t: float) -> tuple[float, float]:
        fx = fy = 0.0
        for ev in self.push_events:
            if ev.start <= t < ev.start + ev.duration:
                fx += ev.force_x
                fy += ev.force_y
        return fx, fy

    def _switch_stance(self, t_end: float) -> None:
        p = self.params
        swing = LEFT if self.stance == RIGHT else RIGHT
        swing_q = self.q[5:] if swing == LEFT else self.q[:5]
        foot = leg_foot_position(swing_q, p, swing)
        self.pivot = np.array([self.x + foot[0], self.y + foot[1]])
        self.stance = swing
        self.step_index += 1
        self.clock = PhaseClock(t_end, p.t_step)
        self._anchor_phys = self.q[self._anchor_cols].copy()
        self.fp.start_step(self.x, self.y, t_end)
        self._step_start_t = t_end
        self._step_start_xy = (self.x, self.y)

    def reference_anchor(self) -> np.ndarray:
        """Step-start anchor in the right-stance reference frame.

        This is the q_measured that assemble() expects; during left stance
        it is the mirror transform of the physical anchors the in-env fast
        decode uses directly.
        """
        full = np.zeros(10)
        full[self._anchor_cols] = self._anchor_phys
        if self.stance == LEFT:
            full = mirror_joint_vector(full, self.decoder.perm, self.decoder.signs)
        return full[_LEARNED]

    def _stance_leg_q(self) -> np.ndarray:
        return self.q[:5] if self.stance == RIGHT else self.q[5:]

    def _swing_leg_q(self) -> np.ndarray:
        return self.q[5:] if self.stance == RIGHT else self.q[:5]

    def _feet_rel(self) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        """(right, left) foot points relative to the pelvis, as floats."""
        p = self.params
        q = self.q
        half = 0.5 * p.hip_spacing
        return (
            _foot_floats(q[0], q[1], q[2], q[3], p.thigh_length, p.shin_length, -half),
            _foot_floats(q[5], q[6], q[7], q[8], p.thigh_length, p.shin_length, half),
        )

    def _stance_height(self) -> float:
        foot = leg_foot_position(self._stance_leg_q(), self.params, self.stance)
        return -float(foot[2])

    def _update_velocity_average(self, t_end: float) -> None:
        dt = t_end - self._step_start_t
        if dt > 0.0:
            x0, y0 = self._step_start_xy
            self._v_avg = np.array([(self.x - x0) / dt, (self.y - y0) / dt])

    def _reward_inputs(self, u_mean: np.ndarray) -> rewards.RewardInputs:
        p = self.params
        foot_r, foot_l = self._feet_rel()
        stance_foot = foot_r if self.stance == RIGHT else foot_l
        p_z = -stance_foot[2]
        self._vz = (p_z - self._pz_prev) / p.control_dt
        self._pz_prev = p_z
        dx = foot_r[0] - foot_l[0]
        dy = foot_r[1] - foot_l[1]
        dz = foot_r[2] - foot_l[2]
        d_feet = math.sqrt(dx * dx + dy * dy + dz * dz)

        com_x = self.x + p.com_offset[0]
        com_y = self.y + p.com_offset[1]
        rel_x = com_x - self.pivot[0]
        rel_y = com_y - self.pivot[1]
        d = math.sqrt(rel_x * rel_x + rel_y * rel_y)
        # support polygon is an axis-aligned rectangle about the pivot
        self._com_inside = abs(rel_x) <= self._half_l and abs(rel_y) <= self._half_w
        return rewards.RewardInputs(
            v_x_avg=float(self._v_avg[0]),
            v_y_avg=float(self._v_avg[1]),
            v_x_des=self.v_des[0],
            v_y_des=self.v_des[1],
            p_z=p_z,
            p_z_des=p.p_z_des,
            u_norm=u_mean / self._tau_limit,
            com_xy=np.array([com_x, com_y]),
            support_polygon=self._foot_rect + self.pivot,
            d=d,
            angles=self.angles.copy(),
            rates=self.rates.copy(),
            d_feet=d_feet,
        )

    def _observation(self) -> np.ndarray:
        obs = np.empty(OBS_DIM)
        obs[0] = self.v_des[0]
        obs[1] = self.v_des[1]
        obs[2] = self._v_avg[0]
        obs[3] = self._v_avg[1]
        obs[4] = self._v_avg[0] - self.v_des[0]
        obs[5] = self._v_avg[1] - self.v_des[1]
        obs[6:9] = self.angles
        obs[9:12] = self.rates
        return obs

    # ------------------------------------------------------------------
    # introspection

    @property
    def terminated(self) -> bool:
        return self._terminated

    @property
    def time(self) -> float:
        return self.tick * self.params.control_dt

    def tau(self) -> float:
        return phase(self.clock, self.time)

    def state(self) -> SimState:
        p_z = self._stance_height()
        return SimState(
            time=self.time,
            tick=self.tick,
            tau=self.tau(),
            stance=self.stance,
            step_index=self.step_index,
            pelvis_pos=np.array([self.x, self.y, p_z]),
            pelvis_vel=np.array([self.vx, self.vy, self._vz]),
            torso_angles=self.angles.copy(),
            torso_rates=self.rates.copy(),
            q=self.q.copy(),
            qd=self.qd.copy(),
            stance_foot=self.pivot.copy(),
            v_avg=self._v_avg.copy(),
            push_force=self._push_now.copy(),
        )
