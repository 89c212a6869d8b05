#!/usr/bin/env node
/**
 * recparity-plots render --csv sweep.csv --kind scatter|lines
 *                        --x <metric|param> --y <metric> --out figure.svg
 *                        [--title text] [--timestamp]
 *
 * Renders a recparity sweep CSV into an SVG figure. Exit codes: 0 on
 * success, 1 with a diagnostic on stderr for usage, CSV, or data errors.
 */

import { FigureKind, render } from "./render.js";

function usage(): string {
  return (
    "usage: recparity-plots render --csv <path> --kind scatter|lines " +
    "--x <metric|param> --y <metric> --out <path.svg> [--title text] " +
    "[--timestamp]"
  );
}

export function main(argv: string[]): number {
  if (argv.length === 0 || argv[0] !== "render") {
    console.error(usage());
    return 1;
  }
  const opts = new Map<string, string>();
  let timestamp = false;
  for (let i = 1; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--timestamp") {
      timestamp = true;
      continue;
    }
    if (!arg.startsWith("--") || i + 1 >= argv.length) {
      console.error(`unexpected argument '${arg}'\n${usage()}`);
      return 1;
    }
    opts.set(arg.slice(2), argv[++i]);
  }
  for (const required of ["csv", "kind", "x", "y", "out"]) {
    if (!opts.has(required)) {
      console.error(`missing --${required}\n${usage()}`);
      return 1;
    }
  }
  const kind = opts.get("kind")!;
  if (kind !== "scatter" && kind !== "lines") {
    console.error(`--kind must be 'scatter' or 'lines', got '${kind}'`);
    return 1;
  }
  try {
    render({
      csvPath: opts.get("csv")!,
      kind: kind as FigureKind,
      x: opts.get("x")!,
      y: opts.get("y")!,
      outPath: opts.get("out")!,
      title: opts.get("title"),
      timestamp,
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
