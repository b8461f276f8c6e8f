#!/usr/bin/env node
/**
 * Sandboxed program runner, wire-compatible drop-in front end.
 *
 * Usage: sandbox-shim <program.py> [--wall-ms N] [--mem-mb M]
 *
 * Exit codes: 0 program ran to completion, 124 wall-clock timeout,
 * 137 memory kill, 2 unreadable program file or bad usage, any other
 * nonzero a program error. The program's stdout is framed between the
 * begin/end sentinel lines by the child bootstrap; this process writes
 * nothing to stdout, so the frame stays clean.
 *
 * Layering: the Python child enforces the cooperative limits (alarm,
 * RLIMIT_AS, RLIMIT_CPU) and emits the end sentinel on every path it
 * survives. This parent holds the last line of defense: a SIGKILL timer
 * slightly past the wall limit for programs that disable the alarm, plus
 * exit-code mapping for kills the child could not report itself.
 */

import { spawn } from "node:child_process";
import fs from "node:fs";
import path from "node:path";
import { parseArgs } from "node:util";

const EXIT_PROGRAM_ERROR = 1;
const EXIT_USAGE = 2;
const EXIT_UNREADABLE = 2;
const EXIT_TIMEOUT = 124;
const EXIT_MEMORY = 137;

// Backstop margin: the child's own alarm fires at the wall limit, so the
// hard kill only triggers when that alarm was suppressed.
const KILL_GRACE_MS = 400;

const USAGE = "usage: sandbox-shim <program> [--wall-ms N] [--mem-mb M]\n";

function fail(code: number, message: string): never {
  process.stderr.write(`sandbox-shim: ${message}\n`);
  process.exit(code);
}

interface Invocation {
  program: string;
  wallMs: number;
  memMb: number;
}

function positiveInt(raw: string, flag: string): number {
  if (!/^\d+$/.test(raw)) {
    process.stderr.write(USAGE);
    fail(EXIT_USAGE, `${flag} expects a positive integer, got ${JSON.stringify(raw)}`);
  }
  const value = Number(raw);
  if (value <= 0) {
    process.stderr.write(USAGE);
    fail(EXIT_USAGE, "limits must be positive");
  }
  return value;
}

export function parseInvocation(argv: string[]): Invocation {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        "wall-ms": { type: "string", default: "10000" },
        "mem-mb": { type: "string", default: "512" },
      },
      allowPositionals: true,
    });
  } catch (err) {
    process.stderr.write(USAGE);
    fail(EXIT_USAGE, err instanceof Error ? err.message : String(err));
  }
  if (parsed.positionals.length !== 1) {
    process.stderr.write(USAGE);
    fail(EXIT_USAGE, "expected exactly one program file");
  }
  return {
    program: parsed.positionals[0],
    wallMs: positiveInt(parsed.values["wall-ms"] as string, "--wall-ms"),
    memMb: positiveInt(parsed.values["mem-mb"] as string, "--mem-mb"),
  };
}

function checkReadable(program: string): void {
  // Unreadable input is a distinct outcome (exit 2): the program never ran,
  // so no sentinel frame appears on stdout.
  try {
    const st = fs.statSync(program);
    if (!st.isFile()) {
      fail(EXIT_UNREADABLE, `cannot read program file: not a regular file: ${program}`);
    }
    fs.accessSync(program, fs.constants.R_OK);
  } catch (err) {
    if (err && typeof err === "object" && "code" in err) {
      fail(EXIT_UNREADABLE, `cannot read program file: ${(err as NodeJS.ErrnoException).message}`);
    }
    throw err;
  }
}

function main(): void {
  const { program, wallMs, memMb } = parseInvocation(process.argv.slice(2));
  checkReadable(program);

  const bootstrap = path.join(__dirname, "bootstrap.py");
  if (!fs.existsSync(bootstrap)) {
    fail(EXIT_PROGRAM_ERROR, `runner asset missing: ${bootstrap} (incomplete build)`);
  }

  // stdout/stderr are inherited file descriptors: the child writes the
  // sentinel frame straight through and this process adds no stdout bytes.
  const child = spawn(
    "python3",
    ["-I", "-B", bootstrap, program, String(wallMs), String(memMb)],
    { stdio: ["ignore", "inherit", "inherit"] },
  );

  let timedOut = false;
  const killer = setTimeout(() => {
    timedOut = true;
    child.kill("SIGKILL");
  }, wallMs + KILL_GRACE_MS);

  child.on("error", (err) => {
    clearTimeout(killer);
    fail(EXIT_PROGRAM_ERROR, `failed to launch python3: ${err.message}`);
  });

  child.on("exit", (code, signal) => {
    clearTimeout(killer);
    if (timedOut) {
      process.stderr.write("sandbox-shim: hard kill past the wall-clock limit\n");
      process.exit(EXIT_TIMEOUT);
    }
    if (signal === "SIGXCPU") {
      // Kernel CPU backstop fired: the wall alarm was suppressed.
      process.stderr.write("sandbox-shim: cpu limit exceeded\n");
      process.exit(EXIT_TIMEOUT);
    }
    if (signal === "SIGKILL") {
      // Not our kill (timedOut is false), so the kernel ended the child;
      // with the address-space cap in place that means out-of-memory.
      process.stderr.write("sandbox-shim: killed by the kernel (out of memory)\n");
      process.exit(EXIT_MEMORY);
    }
    if (signal !== null) {
      process.stderr.write(`sandbox-shim: program died on ${signal}\n`);
      process.exit(EXIT_PROGRAM_ERROR);
    }
    process.exit(code ?? EXIT_PROGRAM_ERROR);
  });
}

if (require.main === module) {
  main();
}
