/**
 * Loopback echo environment: deterministic synthetic state with no physics.
 *
 * Joint and observation channels walk a shared 64-point sine table; the
 * gaitforge core embeds the same table literals, so a client driving this
 * environment over the wire sees values bit-identical to its in-process
 * twin. Aux quantities are constant. Episodes last exactly ECHO_HORIZON
 * steps; stepping a finished episode is a protocol error.
 */

export const ECHO_HORIZON = 1000;

// sin(2*pi*i/64) for i = 0..63, float64 literals shared with the core.
export const SINE_TABLE: readonly number[] = [
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
];

export interface StepReply {
  ok: true;
  obs: number[];
  q: number[];
  qd: number[];
  aux: Record<string, unknown>;
  pelvis_xy: number[];
  terminated: boolean;
  step_count: number;
}

export interface ErrorReply {
  ok: false;
  error: string;
}

export interface Environment {
  reset(seed: number, vDesired: [number, number]): StepReply | ErrorReply;
  step(payload: Record<string, unknown>): StepReply | ErrorReply;
  push(payload: Record<string, unknown>): { ok: true } | ErrorReply;
}

function obsAt(k: number, s: number): number[] {
  const out: number[] = [];
  for (let i = 0; i < 12; i++) {
    out.push(0.1 * SINE_TABLE[(5 * k + 11 * i + s) % 64]);
  }
  return out;
}

function qAt(k: number, s: number): number[] {
  const out: number[] = [];
  for (let j = 0; j < 10; j++) {
    out.push(0.3 * SINE_TABLE[(3 * k + 7 * j + s) % 64]);
  }
  return out;
}

function qdAt(k: number, s: number): number[] {
  const out: number[] = [];
  for (let j = 0; j < 10; j++) {
    out.push(3.0 * SINE_TABLE[(3 * k + 7 * j + s + 16) % 64]);
  }
  return out;
}

function constantAux(): Record<string, unknown> {
  return {
    p_z: 0.95,
    com_xy: [0.0, 0.0],
    support_polygon: [
      [0.08, 0.02],
      [-0.08, 0.02],
      [-0.08, -0.02],
      [0.08, -0.02],
    ],
    d: 0.05,
    d_feet: 0.3,
    u_norm: [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    angles: [0, 0, 0],
    rates: [0, 0, 0],
  };
}

export class EchoEnv implements Environment {
  private k = 0;
  private s = 0;
  private running = false;

  reset(seed: number, _vDesired: [number, number]): StepReply {
    this.k = 0;
    this.s = ((Math.trunc(seed) % 64) + 64) % 64;
    this.running = true;
    return {
      ok: true,
      obs: obsAt(0, this.s),
      q: qAt(0, this.s),
      qd: qdAt(0, this.s),
      aux: constantAux(),
      pelvis_xy: [0.0, 0.0],
      terminated: false,
      step_count: 0,
    };
  }

  step(_payload: Record<string, unknown>): StepReply | ErrorReply {
    if (!this.running) {
      return { ok: false, error: "episode_done" };
    }
    this.k += 1;
    const terminated = this.k >= ECHO_HORIZON;
    if (terminated) {
      this.running = false;
    }
    return {
      ok: true,
      obs: obsAt(this.k, this.s),
      q: qAt(this.k, this.s),
      qd: qdAt(this.k, this.s),
      aux: constantAux(),
      pelvis_xy: [0.0, 0.0],
      terminated,
      step_count: this.k,
    };
  }

  push(_payload: Record<string, unknown>): { ok: true } {
    return { ok: true };
  }
}
