/**
 * Single-session TCP bridge server.
 *
 * One client at a time drives the backing environment in lock step:
 * every request frame gets exactly one reply frame. A malformed frame
 * earns an error reply and a connection reset; a backend exception earns
 * an error reply but keeps the session alive. Additional clients are
 * turned away while a session is active.
 */
import * as net from "net";

import { FrameParser, FramingError, encodeFrame } from "./framing";
import { Environment } from "./echo";
import { Mode, OBS_DIM, PROTOCOL_VERSION, RAW_ACTION_DIM, TORQUE_DIM, validateAux } from "./protocol";

interface SessionState {
  helloDone: boolean;
  mode: Mode;
}

function handleRequest(
  payload: unknown,
  env: Environment,
  state: SessionState,
): { reply: Record<string, unknown>; closeAfter: boolean } {
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
    return { reply: { ok: false, error: "bad_request" }, closeAfter: false };
  }
  const req = payload as Record<string, unknown>;
  const op = req["op"];

  switch (op) {
    case "hello": {
      if (req["protocol"] !== PROTOCOL_VERSION) {
        return {
          reply: {
            ok: false,
            error: "version_mismatch",
            expected: PROTOCOL_VERSION,
            got: req["protocol"] ?? null,
          },
          closeAfter: false,
        };
      }
      const mode: Mode = req["mode"] === "torque" ? "torque" : "raw";
      state.helloDone = true;
      state.mode = mode;
      return {
        reply: {
          ok: true,
          protocol: PROTOCOL_VERSION,
          obs_dim: OBS_DIM,
          action_dim: mode === "torque" ? TORQUE_DIM : RAW_ACTION_DIM,
          mode,
          env: "echo",
        },
        closeAfter: false,
      };
    }
    case "reset": {
      if (!state.helloDone) {
        return { reply: { ok: false, error: "handshake_required" }, closeAfter: false };
      }
      const seed = typeof req["seed"] === "number" ? (req["seed"] as number) : 0;
      const v = Array.isArray(req["v_desired"]) ? (req["v_desired"] as number[]) : [0, 0];
      try {
        const reply = env.reset(seed, [v[0] ?? 0, v[1] ?? 0]);
        if (reply.ok) {
          const problem = validateAux((reply as unknown as Record<string, unknown>)["aux"]);
          if (problem) {
            return { reply: { ok: false, error: `backend aux invalid: ${problem}` }, closeAfter: false };
          }
        }
        return { reply: reply as unknown as Record<string, unknown>, closeAfter: false };
      } catch (err) {
        return {
          reply: { ok: false, error: `backend error: ${(err as Error).message}` },
          closeAfter: false,
        };
      }
    }
    case "step": {
      if (!state.helloDone) {
        return { reply: { ok: false, error: "handshake_required" }, closeAfter: false };
      }
      try {
        const reply = env.step(req);
        if (reply.ok) {
          const problem = validateAux((reply as unknown as Record<string, unknown>)["aux"]);
          if (problem) {
            return { reply: { ok: false, error: `backend aux invalid: ${problem}` }, closeAfter: false };
          }
        }
        return { reply: reply as unknown as Record<string, unknown>, closeAfter: false };
      } catch (err) {
        return {
          reply: { ok: false, error: `backend error: ${(err as Error).message}` },
          closeAfter: false,
        };
      }
    }
    case "push": {
      if (!state.helloDone) {
        return { reply: { ok: false, error: "handshake_required" }, closeAfter: false };
      }
      try {
        return { reply: env.push(req) as unknown as Record<string, unknown>, closeAfter: false };
      } catch (err) {
        return {
          reply: { ok: false, error: `backend error: ${(err as Error).message}` },
          closeAfter: false,
        };
      }
    }
    case "close":
      return { reply: { ok: true }, closeAfter: true };
    default:
      return { reply: { ok: false, error: "unknown_op" }, closeAfter: false };
  }
}

export interface BridgeServer {
  server: net.Server;
  port: () => number;
  close: () => Promise<void>;
}

/** Start serving; resolves once the listener is bound. */
export function serve(
  port: number,
  makeEnv: () => Environment,
  host = "127.0.0.1",
): Promise<BridgeServer> {
  let activeSocket: net.Socket | null = null;
  const openSockets = new Set<net.Socket>();

  const server = net.createServer((socket) => {
    openSockets.add(socket);
    socket.on("close", () => openSockets.delete(socket));
    socket.on("error", () => socket.destroy());
    if (activeSocket !== null) {
      socket.write(encodeFrame({ ok: false, error: "busy" }));
      socket.end();
      return;
    }
    activeSocket = socket;
    const env = makeEnv();
    const state: SessionState = { helloDone: false, mode: "raw" };
    const parser = new FrameParser();

    socket.on("data", (chunk) => {
      const buf = typeof chunk === "string" ? Buffer.from(chunk, "utf-8") : chunk;
      let payloads: unknown[];
      try {
        payloads = parser.feed(buf);
      } catch (err) {
        if (err instanceof FramingError) {
          socket.write(encodeFrame({ ok: false, error: "bad_frame" }));
          socket.destroy();
          return;
        }
        throw err;
      }
      for (const payload of payloads) {
        const { reply, closeAfter } = handleRequest(payload, env, state);
        socket.write(encodeFrame(reply));
        if (closeAfter) {
          socket.end();
        }
      }
    });
    socket.on("close", () => {
      if (activeSocket === socket) {
        activeSocket = null;
      }
    });
  });

  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      resolve({
        server,
        port: () => (server.address() as net.AddressInfo).port,
        close: () =>
          new Promise<void>((res) => {
            server.close(() => res());
            // half-closed stragglers must not hold the listener open
            for (const socket of openSockets) {
              socket.destroy();
            }
          }),
      });
    });
  });
}
