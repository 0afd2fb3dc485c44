/**
 * Adapter entry point.
 *
 * Child-process mode (default) speaks the line protocol over stdin/stdout:
 *
 *   node dist/main.js --model echo --fingerprint <hex> --vocab-size <n>
 *
 * Server mode listens on a local TCP port, one engine session per connection:
 *
 *   node dist/main.js --model echo --fingerprint <hex> --vocab-size <n> \
 *     --listen 127.0.0.1:7311
 *
 * Latency lines go to stderr when --log-latency is set.
 */

import net from "node:net";
import readline from "node:readline";
import process from "node:process";

import { modelByName } from "./models.js";
import { AdapterConfig, AdapterSession } from "./server.js";

interface CliArgs {
  model: string;
  fingerprint: string;
  vocabSize: number;
  listen?: string;
  logLatency: boolean;
}

function parseArgs(argv: string[]): CliArgs {
  const args: Partial<CliArgs> = { model: "echo", logLatency: false };
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) {
        throw new Error(`missing value for ${arg}`);
      }
      return argv[i];
    };
    switch (arg) {
      case "--model":
        args.model = next();
        break;
      case "--fingerprint":
        args.fingerprint = next();
        break;
      case "--vocab-size":
        args.vocabSize = Number.parseInt(next(), 10);
        break;
      case "--listen":
        args.listen = next();
        break;
      case "--log-latency":
        args.logLatency = true;
        break;
      default:
        throw new Error(`unknown argument: ${arg}`);
    }
  }
  if (!args.fingerprint || !Number.isInteger(args.vocabSize)) {
    throw new Error("--fingerprint and --vocab-size are required");
  }
  return args as CliArgs;
}

function buildConfig(args: CliArgs): AdapterConfig {
  return {
    model: modelByName(args.model),
    tokenizerFingerprint: args.fingerprint,
    vocabSize: args.vocabSize,
    logLatency: args.logLatency
      ? (line) => process.stderr.write(line + "\n")
      : undefined,
  };
}

function runStdio(config: AdapterConfig): void {
  const session = new AdapterSession(config, (line) => {
    process.stdout.write(line + "\n");
  });
  const rl = readline.createInterface({ input: process.stdin, crlfDelay: Infinity });
  rl.on("line", (line) => {
    session.handleLine(line);
    if (session.closed) {
      rl.close();
      process.exit(1);
    }
  });
  rl.on("close", () => process.exit(session.closed ? 1 : 0));
}

function runSocket(config: AdapterConfig, listen: string): void {
  const [host, portText] = listen.split(":");
  const port = Number.parseInt(portText, 10);
  const server = net.createServer((socket) => {
    const session = new AdapterSession(config, (line) => {
      socket.write(line + "\n");
    });
    const rl = readline.createInterface({ input: socket, crlfDelay: Infinity });
    rl.on("line", (line) => {
      session.handleLine(line);
      if (session.closed) {
        socket.end();
      }
    });
    socket.on("error", () => socket.destroy());
  });
  server.listen(port, host, () => {
    process.stderr.write(`adapter listening on ${host}:${port}\n`);
  });
}

function main(): void {
  let args: CliArgs;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    process.exit(2);
  }
  const config = buildConfig(args);
  if (args.listen) {
    runSocket(config, args.listen);
  } else {
    runStdio(config);
  }
}

main();
