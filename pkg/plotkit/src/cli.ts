#!/usr/bin/env node
/**
 * plotkit --root <results-dir> [--figure <id>] --out <dir>
 *
 * Renders SVG figures from simulator run directories. Without --figure,
 * renders every figure the tree supports and writes index.html; missing
 * runs skip their figures and are listed. Exit 0 on success, 1 when a
 * requested figure cannot be rendered, 2 for bad usage.
 */

import { parseArgs } from "node:util";

import { SchemaError } from "./csv.js";
import { renderAll, renderFigure } from "./index.js";

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        root: { type: "string" },
        figure: { type: "string" },
        out: { type: "string", default: "figures" },
        help: { type: "boolean", default: false },
      },
      allowPositionals: false,
    });
  } catch (err) {
    console.error(`plotkit: ${(err as Error).message}`);
    return 2;
  }
  const { root, figure, out, help } = args.values;
  if (help) {
    console.log("usage: plotkit --root <results-dir> [--figure <id>] [--out <dir>]");
    return 0;
  }
  if (!root) {
    console.error("plotkit: --root <results-dir> is required");
    return 2;
  }

  if (figure) {
    try {
      console.log(renderFigure(figure, root, out!));
      return 0;
    } catch (err) {
      if (err instanceof RangeError) {
        console.error(`plotkit: ${err.message}`);
        return 2;
      }
      if (err instanceof SchemaError) {
        console.error(`plotkit: ${err.message}`);
        return 1;
      }
      throw err;
    }
  }

  const result = renderAll(root, out!);
  for (const path of result.written) console.log(path);
  for (const skip of result.skipped) {
    console.error(`plotkit: skipped ${skip.id}: ${skip.reason}`);
  }
  console.log(result.indexPath);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
