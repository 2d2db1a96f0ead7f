#!/usr/bin/env node
/** cocycleplots --spec <json>: render one figure from an experiment CSV. */

import { readFileSync, writeFileSync } from "node:fs";

import { render } from "./render.js";
import { parsePlotSpec, SchemaError } from "./spec.js";

function main(argv: string[]): number {
  const idx = argv.indexOf("--spec");
  if (idx === -1 || idx + 1 >= argv.length) {
    process.stderr.write("usage: cocycleplots --spec <path to plot-spec JSON>\n");
    return 2;
  }
  const specPath = argv[idx + 1];
  let spec;
  try {
    spec = parsePlotSpec(JSON.parse(readFileSync(specPath, "utf8")));
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`cocycleplots: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`cocycleplots: cannot read spec ${specPath}: ${(err as Error).message}\n`);
    return 2;
  }
  try {
    const result = render(spec);
    writeFileSync(spec.output, result.svg);
    process.stdout.write(
      `wrote ${spec.output} (${result.plotted} points, ${result.dropped} dropped)\n`,
    );
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`cocycleplots: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

process.exit(main(process.argv.slice(2)));
