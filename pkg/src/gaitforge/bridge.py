"""Client side of the physics-bridge wire protocol, plus a local echo twin.

The bridge lets the core drive an external physics backend over TCP using
length-prefixed JSON frames: a u32 little-endian byte count followed by a
UTF-8 JSON object with an "op" field. The server half lives in a separate
package; this module provides the framing codec, the blocking client, the
control stack for decoded-torque mode, and an in-process echo environment
that mirrors the server's loopback environment value for value, so the
protocol plumbing is testable without physics or even without the server.
"""
from __future__ import annotations

import json
import socket
import struct
from dataclasses import dataclass

import numpy as np

from .bezier import PhaseClock, bernstein_basis, bernstein_basis_deriv, phase
from .config import RunConfig
from .decoder import check_raw_action
from .env import _ROLE_IDX, RIGHT, LEFT, PushEvent, StepResult
from .regulators import FootPlacementState, swing_ankle_reference, torso_torque
from . import rewards

PROTOCOL_VERSION = 1
DEFAULT_PORT = 7787
MAX_FRAME_BYTES = 16 * 1024 * 1024

# Shared 64-point sine table; the bridge server embeds the same literals so
# echo observations are bit-identical across the two implementations.
SINE_TABLE = (
    0.0, 0.0980171403295606, 0.19509032201612825, 0.29028467725446233,
    0.3826834323650898, 0.47139673682599764, 0.5555702330196022, 0.6343932841636455,
    0.7071067811865475, 0.773010453362737, 0.8314696123025452, 0.8819212643483549,
    0.9238795325112867, 0.9569403357322089, 0.9807852804032304, 0.9951847266721968,
    1.0, 0.9951847266721969, 0.9807852804032304, 0.9569403357322089,
    0.9238795325112867, 0.881921264348355, 0.8314696123025455, 0.7730104533627371,
    0.7071067811865476, 0.6343932841636455, 0.5555702330196022, 0.47139673682599786,
    0.3826834323650899, 0.2902846772544624, 0.1950903220161286, 0.09801714032956083,
    1.2246467991473532e-16, -0.09801714032956059, -0.19509032201612836, -0.2902846772544621,
    -0.38268343236508967, -0.47139673682599764, -0.555570233019602, -0.6343932841636453,
    -0.7071067811865475, -0.7730104533627367, -0.8314696123025452, -0.8819212643483549,
    -0.9238795325112865, -0.9569403357322088, -0.9807852804032303, -0.9951847266721969,
    -1.0, -0.9951847266721969, -0.9807852804032304, -0.9569403357322089,
    -0.9238795325112866, -0.881921264348355, -0.8314696123025455, -0.7730104533627369,
    -0.7071067811865477, -0.6343932841636459, -0.5555702330196022, -0.4713967368259979,
    -0.3826834323650904, -0.2902846772544625, -0.19509032201612872, -0.0980171403295605,
)

ECHO_HORIZON = 1000

AUX_SCHEMA = {
    "p_z": float,
    "com_xy": (2,),
    "support_polygon": "polygon",
    "d": float,
    "d_feet": float,
    "u_norm": (10,),
    "angles": (3,),
    "rates": (3,),
}


class BridgeError(RuntimeError):
    """Protocol-level failure talking to a bridge server."""


def encode_frame(payload: dict) -> bytes:
    body = json.dumps(payload, separators=(",", ":")).encode("utf-8")
    if len(body) > MAX_FRAME_BYTES:
        raise BridgeError(f"frame too large: {len(body)} bytes")
    return struct.pack("<I", len(body)) + body


def decode_frames(buffer: bytes) -> tuple[list[dict], bytes]:
    """Split complete frames off a byte buffer; returns (payloads, rest)."""
    out = []
    pos = 0
    while len(buffer) - pos >= 4:
        (length,) = struct.unpack_from("<I", buffer, pos)
        if length > MAX_FRAME_BYTES:
            raise BridgeError(f"frame length {length} exceeds limit")
        if len(buffer) - pos - 4 < length:
            break
        body = buffer[pos + 4:pos + 4 + length]
        try:
            out.append(json.loads(body.decode("utf-8")))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BridgeError(f"malformed frame payload: {exc}") from exc
        pos += 4 + length
    return out, buffer[pos:]


def validate_aux(aux: dict) -> None:
    """Check a step reply's aux payload against the published schema."""
    if not isinstance(aux, dict):
        raise BridgeError("aux payload must be an object")
    for key, shape in AUX_SCHEMA.items():
        if key not in aux:
            raise BridgeError(f"aux payload missing field {key!r}")
        value = aux[key]
        if shape is float:
            if not isinstance(value, (int, float)):
                raise BridgeError(f"aux field {key!r} must be a number")
        elif shape == "polygon":
            if (not isinstance(value, list) or len(value) < 3
                    or any(not isinstance(v, list) or len(v) != 2 for v in value)):
                raise BridgeError(f"aux field {key!r} must be >=3 [x, y] vertices")
        else:
            if not isinstance(value, list) or len(value) != shape[0]:
                raise BridgeError(f"aux field {key!r} must have length {shape[0]}")


# ----------------------------------------------------------------------
# echo environment (in-process twin of the server's loopback env)

class EchoEnv:
    """Deterministic synthetic environment, value-identical to the server's.

    Joints follow table sinusoids, aux is constant, episodes last exactly
    ECHO_HORIZON steps. Exists so the protocol and trace plumbing can be
    exercised with no physics anywhere.
    """

    def __init__(self) -> None:
        self._k = 0
        self._s = 0
        self._running = False

    @staticmethod
    def _obs(k: int, s: int) -> list[float]:
        return [0.1 * SINE_TABLE[(5 * k + 11 * i + s) % 64] for i in range(12)]

    @staticmethod
    def _q(k: int, s: int) -> list[float]:
        return [0.3 * SINE_TABLE[(3 * k + 7 * j + s) % 64] for j in range(10)]

    @staticmethod
    def _qd(k: int, s: int) -> list[float]:
        return [3.0 * SINE_TABLE[(3 * k + 7 * j + s + 16) % 64] for j in range(10)]

    @staticmethod
    def _aux() -> dict:
        return {
            "p_z": 0.95,
            "com_xy": [0.0, 0.0],
            "support_polygon": [[0.08, 0.02], [-0.08, 0.02], [-0.08, -0.02], [0.08, -0.02]],
            "d": 0.05,
            "d_feet": 0.3,
            "u_norm": [0.0] * 10,
            "angles": [0.0] * 3,
            "rates": [0.0] * 3,
        }

    def reset(self, seed: int, v_desired) -> dict:
        self._k = 0
        self._s = int(seed) % 64
        self._running = True
        return {
            "ok": True,
            "obs": self._obs(0, self._s),
            "q": self._q(0, self._s),
            "qd": self._qd(0, self._s),
            "aux": self._aux(),
            "pelvis_xy": [0.0, 0.0],
            "terminated": False,
            "step_count": 0,
        }

    def step(self, _payload: dict) -> dict:
        if not self._running:
            return {"ok": False, "error": "episode_done"}
        self._k += 1
        terminated = self._k >= ECHO_HORIZON
        if terminated:
            self._running = False
        return {
            "ok": True,
            "obs": self._obs(self._k, self._s),
            "q": self._q(self._k, self._s),
            "qd": self._qd(self._k, self._s),
            "aux": self._aux(),
            "pelvis_xy": [0.0, 0.0],
            "terminated": terminated,
            "step_count": self._k,
        }

    def push(self, _payload: dict) -> dict:
        return {"ok": True}


class InProcessEchoClient:
    """Client-shaped adapter over the local EchoEnv.

    Lets the core run its full bridge path (BridgeEnv, rewards, traces)
    against the echo twin with no socket, for contract-equivalence tests.
    """

    mode = "raw"
    obs_dim = 12
    action_dim = 45
    env_name = "echo"

    def __init__(self) -> None:
        self._env = EchoEnv()

    def reset(self, seed: int, v_desired) -> dict:
        reply = self._env.reset(seed, v_desired)
        validate_aux(reply["aux"])
        return reply

    def step_raw(self, action: np.ndarray) -> dict:
        reply = self._env.step({"action": [float(a) for a in action]})
        if not reply.get("ok"):
            raise BridgeError(f"step failed: {reply.get('error')}")
        validate_aux(reply["aux"])
        return reply

    def step_torques(self, torque_frames: np.ndarray) -> dict:
        reply = self._env.step({"torques": [[float(u) for u in f] for f in torque_frames]})
        if not reply.get("ok"):
            raise BridgeError(f"step failed: {reply.get('error')}")
        validate_aux(reply["aux"])
        return reply

    def push(self, event: PushEvent) -> None:
        self._env.push({})

    def close(self) -> None:
        pass


# ----------------------------------------------------------------------
# blocking client

class BridgeClient:
    """Lock-step client for a bridge server (one request, one reply)."""

    def __init__(self, address: str, mode: str = "raw", timeout: float = 10.0):
        host, _, port = address.partition(":")
        self._sock = socket.create_connection(
            (host or "127.0.0.1", int(port) if port else DEFAULT_PORT), timeout=timeout
        )
        self._buf = b""
        self.mode = mode
        reply = self.request({"op": "hello", "protocol": PROTOCOL_VERSION, "mode": mode})
        if not reply.get("ok"):
            raise BridgeError(f"handshake rejected: {reply.get('error', 'unknown')}")
        self.obs_dim = int(reply["obs_dim"])
        self.action_dim = int(reply["action_dim"])
        self.env_name = reply.get("env", "unknown")

    def request(self, payload: dict) -> dict:
        self._sock.sendall(encode_frame(payload))
        while True:
            frames, self._buf = decode_frames(self._buf)
            if frames:
                return frames[0]
            chunk = self._sock.recv(65536)
            if not chunk:
                raise BridgeError("connection closed by server")
            self._buf += chunk

    def reset(self, seed: int, v_desired) -> dict:
        reply = self.request(
            {"op": "reset", "seed": int(seed),
             "v_desired": [float(v_desired[0]), float(v_desired[1])]}
        )
        if not reply.get("ok"):
            raise BridgeError(f"reset failed: {reply.get('error')}")
        validate_aux(reply["aux"])
        return reply

    def step_raw(self, action: np.ndarray) -> dict:
        reply = self.request({"op": "step", "action": [float(a) for a in action]})
        if not reply.get("ok"):
            raise BridgeError(f"step failed: {reply.get('error')}")
        validate_aux(reply["aux"])
        return reply

    def step_torques(self, torque_frames: np.ndarray) -> dict:
        reply = self.request(
            {"op": "step", "torques": [[float(u) for u in frame] for frame in torque_frames]}
        )
        if not reply.get("ok"):
            raise BridgeError(f"step failed: {reply.get('error')}")
        validate_aux(reply["aux"])
        return reply

    def push(self, event: PushEvent) -> None:
        reply = self.request(
            {"op": "push", "start": event.start, "duration": event.duration,
             "force_x": event.force_x, "force_y": event.force_y}
        )
        if not reply.get("ok"):
            raise BridgeError(f"push failed: {reply.get('error')}")

    def close(self) -> None:
        try:
            self.request({"op": "close"})
        except BridgeError:
            pass
        self._sock.close()


# ----------------------------------------------------------------------
# decoded-torque control stack

class ControlStack:
    """The decoder/regulator/PD half of the surrogate, without dynamics.

    Used in the bridge's decoded-torque mode: given the remote state at
    each 1 kHz tick, produce the two 0.5 ms PD torque frames. Measurements
    are zero-order held across the tick; desired trajectories re-evaluate
    at each substep. Stance switching is clocked locally at tau = 1.
    """

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.decoder = cfg.make_decoder()
        self.bounds = self.decoder.bounds
        p = cfg.env
        self._kp = np.concatenate([p.kp_joint, p.kp_joint])
        self._tau_limit = np.concatenate([p.torque_limit, p.torque_limit])
        self._dt_sub = p.control_dt / p.substeps

    def start_episode(self, q: np.ndarray, v_desired) -> None:
        p = self.cfg.env
        self.stance = p.initial_stance
        self.clock = PhaseClock(-0.5 * p.t_step, p.t_step)
        self.v_des = (float(v_desired[0]), float(v_desired[1]))
        self.fp = FootPlacementState()
        self.fp.start_episode(0.0, 0.0, 0.0)
        self.tick = 0
        self._anchor = self._measure(q)

    def _measure(self, q: np.ndarray) -> np.ndarray:
        from .decoder import LEARNED_COLUMNS, mirror_joint_vector

        if self.stance == RIGHT:
            ref = np.asarray(q, float)
        else:
            ref = mirror_joint_vector(q, self.decoder.perm, self.decoder.signs)
        return ref[list(LEARNED_COLUMNS)].copy()

    def torques(self, raw_action: np.ndarray, obs: np.ndarray,
                q: np.ndarray, qd: np.ndarray, x: float = 0.0) -> np.ndarray:
        """Torque frames (substeps, 10) for the current tick."""
        p = self.cfg.env
        raw = check_raw_action(raw_action)
        gait = self.decoder.decode(raw, self._anchor)
        active = gait.alpha_r if self.stance == RIGHT else gait.alpha_l
        kd10 = gait.kd_per_joint()
        st_hr, st_hp, st_ankle, sw_hr, sw_hp, sw_ankle = _ROLE_IDX[self.stance]
        roll, pitch = obs[6], obs[7]
        roll_rate, pitch_rate = obs[9], obs[10]

        t = self.tick * p.control_dt
        self.fp.maybe_refresh(phase(self.clock, t), x, t, self.v_des, gait.kfp)

        lim = p.fp_delta_limit
        delta_x = min(max(self.fp.delta_x, -lim), lim)
        delta_y = min(max(self.fp.delta_y, -lim), lim)
        frames = np.empty((p.substeps, 10))
        for s in range(p.substeps):
            tau = phase(self.clock, t + s * self._dt_sub)
            q_des = bernstein_basis(tau) @ active
            qd_des = (bernstein_basis_deriv(tau) @ active) / p.t_step
            q_des[sw_hp] += delta_x
            q_des[sw_hr] += delta_y
            q_des[sw_ankle] = swing_ankle_reference(pitch)
            qd_des[sw_ankle] = pitch_rate
            u = self._kp * (q_des - q) + kd10 * (qd_des - qd)
            u[st_hr] += torso_torque(roll, roll_rate, gait.kt[0], gait.kt[1])
            u[st_hp] += torso_torque(pitch, pitch_rate, gait.kt[2], gait.kt[3])
            u[st_ankle] = 0.0
            np.clip(u, -self._tau_limit, self._tau_limit, out=u)
            frames[s] = u
        return frames

    def advance(self, q: np.ndarray, x: float) -> None:
        """Account one completed tick; switch stance when tau reaches 1."""
        p = self.cfg.env
        self.tick += 1
        t = self.tick * p.control_dt
        if phase(self.clock, t) >= 1.0:
            self.stance = LEFT if self.stance == RIGHT else RIGHT
            self.clock = PhaseClock(t, p.t_step)
            self._anchor = self._measure(q)
            self.fp.start_step(x, 0.0, t)


class BridgeEnv:
    """Environment-contract adapter over a BridgeClient.

    Exposes reset/step/apply_push like the surrogate, computing rewards
    locally from the aux payload, so evaluation and traces work unchanged
    against a remote backend.
    """

    def __init__(self, client: BridgeClient, cfg: RunConfig):
        self.client = client
        self.cfg = cfg
        self.stack = ControlStack(cfg) if client.mode == "torque" else None
        self._terminated = True
        self.tick = 0
        self.step_index = 0
        self.stance = RIGHT

    def reset(self, seed: int, v_desired) -> np.ndarray:
        reply = self.client.reset(seed, v_desired)
        self.v_des = (float(v_desired[0]), float(v_desired[1]))
        self.q = np.array(reply["q"])
        self.qd = np.array(reply["qd"])
        self._last_obs = np.array(reply["obs"])
        self._last_aux = reply["aux"]
        self._x = float(reply.get("pelvis_xy", (0.0, 0.0))[0])
        self.tick = int(reply["step_count"])
        self._terminated = False
        if self.stack is not None:
            self.stack.start_episode(self.q, v_desired)
        return self._last_obs.copy()

    def step(self, raw_action: np.ndarray) -> StepResult:
        if self._terminated:
            raise ValueError("episode has terminated; call reset() first")
        if self.stack is None:
            reply = self.client.step_raw(check_raw_action(raw_action))
        else:
            frames = self.stack.torques(
                raw_action, self._last_obs, self.q, self.qd, x=self._x
            )
            reply = self.client.step_torques(frames)
        obs = np.array(reply["obs"])
        self.q = np.array(reply["q"])
        self.qd = np.array(reply["qd"])
        self._last_obs = obs
        self._last_aux = reply["aux"]
        self._x = float(reply.get("pelvis_xy", (0.0, 0.0))[0])
        self.tick = int(reply["step_count"])
        if self.stack is not None:
            self.stack.advance(self.q, self._x)
            self.stance = self.stack.stance
        aux = self._reward_inputs(obs, reply["aux"])
        reward = rewards.compute(aux)
        terminated = bool(reply["terminated"])
        self._terminated = terminated
        return StepResult(obs, reward, terminated, aux)

    def apply_push(self, event: PushEvent) -> None:
        self.client.push(event)

    def _reward_inputs(self, obs: np.ndarray, aux: dict) -> rewards.RewardInputs:
        return rewards.RewardInputs(
            v_x_avg=float(obs[2]),
            v_y_avg=float(obs[3]),
            v_x_des=self.v_des[0],
            v_y_des=self.v_des[1],
            p_z=float(aux["p_z"]),
            p_z_des=self.cfg.env.p_z_des,
            u_norm=np.array(aux["u_norm"]),
            com_xy=np.array(aux["com_xy"]),
            support_polygon=np.array(aux["support_polygon"]),
            d=float(aux["d"]),
            angles=np.array(aux["angles"]),
            rates=np.array(aux["rates"]),
            d_feet=float(aux["d_feet"]),
        )

    @property
    def terminated(self) -> bool:
        return self._terminated

    @property
    def time(self) -> float:
        return self.tick * self.cfg.env.control_dt

    def tau(self) -> float:
        if self.stack is not None:
            return phase(self.stack.clock, self.time)
        return 0.0
