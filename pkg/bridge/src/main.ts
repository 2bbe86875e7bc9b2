/** CLI entry: start the bridge with the selected backing environment. */
import { EchoEnv } from "./echo";
import { DEFAULT_PORT } from "./protocol";
import { serve } from "./server";

function parseArgs(argv: string[]): { port: number; env: string } {
  let port = DEFAULT_PORT;
  let env = "echo";
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--port" && i + 1 < argv.length) {
      port = parseInt(argv[++i], 10);
    } else if (argv[i] === "--env" && i + 1 < argv.length) {
      env = argv[++i];
    } else if (argv[i] === "--help") {
      console.log("usage: node dist/src/main.js [--port N] [--env echo]");
      process.exit(0);
    }
  }
  return { port, env };
}

async function main(): Promise<void> {
  const { port, env } = parseArgs(process.argv.slice(2));
  if (env !== "echo") {
    // A physics-backed environment plugs in here by implementing the
    // Environment interface; only the loopback env ships, so anything
    // else is a configuration mistake.
    console.error(`unknown environment '${env}' (available: echo)`);
    process.exit(2);
  }
  const bridge = await serve(port, () => new EchoEnv());
  console.log(`gaitforge-bridge listening on ${bridge.port()} (env: ${env})`);
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
