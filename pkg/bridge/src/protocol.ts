/**
 * Protocol constants and the AuxPayload schema check.
 *
 * Every step/reset reply carries an aux object with the quantities the
 * core's reward stack consumes; the JSON schema lives in
 * schema/aux-payload.schema.json and this validator enforces the same
 * shape at runtime.
 */

export const PROTOCOL_VERSION = 1;
export const DEFAULT_PORT = 7787;
export const OBS_DIM = 12;
export const RAW_ACTION_DIM = 45;
export const TORQUE_DIM = 10;

export type Mode = "raw" | "torque";

const VECTOR_FIELDS: Array<[string, number]> = [
  ["com_xy", 2],
  ["u_norm", 10],
  ["angles", 3],
  ["rates", 3],
];

export function validateAux(aux: unknown): string | null {
  if (typeof aux !== "object" || aux === null || Array.isArray(aux)) {
    return "aux must be an object";
  }
  const rec = aux as Record<string, unknown>;
  for (const key of ["p_z", "d", "d_feet"]) {
    if (typeof rec[key] !== "number" || !Number.isFinite(rec[key] as number)) {
      return `aux field ${key} must be a finite number`;
    }
  }
  for (const [key, len] of VECTOR_FIELDS) {
    const v = rec[key];
    if (!Array.isArray(v) || v.length !== len || v.some((x) => typeof x !== "number")) {
      return `aux field ${key} must be ${len} numbers`;
    }
  }
  const poly = rec["support_polygon"];
  if (
    !Array.isArray(poly) ||
    poly.length < 3 ||
    poly.some((v) => !Array.isArray(v) || v.length !== 2 || v.some((x) => typeof x !== "number"))
  ) {
    return "aux field support_polygon must be >=3 [x, y] vertices";
  }
  return null;
}
