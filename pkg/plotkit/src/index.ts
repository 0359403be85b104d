/**
 * Render entry points: one figure, or everything a results tree supports,
 * plus the index page that links the rendered set with run metadata.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { RunData, SchemaError, loadRun } from "./csv.js";
import { FIGURES, FigureDef, figureById } from "./figures.js";

export { FIGURES, figureById } from "./figures.js";
export { SchemaError, loadRun, parseMetricsText } from "./csv.js";

export interface Skip {
  id: string;
  reason: string;
}

export interface RenderAllResult {
  written: string[];
  skipped: Skip[];
  indexPath: string;
}

class RunCache {
  private cache = new Map<string, RunData>();

  constructor(private root: string) {}

  get(name: string): RunData {
    let run = this.cache.get(name);
    if (!run) {
      run = loadRun(join(this.root, name));
      this.cache.set(name, run);
    }
    return run;
  }

  loaded(): RunData[] {
    return [...this.cache.values()].sort((a, b) => a.name.localeCompare(b.name));
  }
}

function renderDef(def: FigureDef, cache: RunCache, outDir: string): string {
  const loaded = new Map<string, RunData>();
  for (const name of def.runs) loaded.set(name, cache.get(name));
  const svg = def.render(loaded);
  const path = join(outDir, `${def.id}.svg`);
  writeFileSync(path, svg);
  return path;
}

/** Render a single figure; throws SchemaError when its runs are unusable. */
export function renderFigure(id: string, root: string, outDir: string): string {
  const def = figureById(id);
  if (!def) {
    const known = FIGURES.map((f) => f.id).join(", ");
    throw new RangeError(`unknown figure "${id}"; expected one of: ${known}`);
  }
  mkdirSync(outDir, { recursive: true });
  return renderDef(def, new RunCache(root), outDir);
}

/** Render whatever the tree supports and write the index page. */
export function renderAll(root: string, outDir: string): RenderAllResult {
  mkdirSync(outDir, { recursive: true });
  const cache = new RunCache(root);
  const written: string[] = [];
  const skipped: Skip[] = [];
  for (const def of FIGURES) {
    try {
      written.push(renderDef(def, cache, outDir));
    } catch (err) {
      if (err instanceof SchemaError) {
        skipped.push({ id: def.id, reason: err.message });
      } else {
        throw err;
      }
    }
  }
  const indexPath = join(outDir, "index.html");
  writeFileSync(indexPath, indexPage(cache.loaded(), written, skipped));
  return { written, skipped, indexPath };
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function indexPage(runs: RunData[], written: string[], skipped: Skip[]): string {
  const lines: string[] = [
    "<!DOCTYPE html>",
    '<html lang="en">',
    "<head>",
    '<meta charset="utf-8">',
    "<title>qosnetsim figures</title>",
    "<style>body{font-family:sans-serif;margin:2em;max-width:60em}" +
      "table{border-collapse:collapse}td,th{border:1px solid #999;" +
      "padding:0.3em 0.6em;font-size:0.9em}code{font-size:0.85em}</style>",
    "</head>",
    "<body>",
    "<h1>qosnetsim figures</h1>",
  ];

  lines.push("<h2>Figures</h2>", "<ul>");
  for (const path of written) {
    const file = path.split("/").pop()!;
    const def = figureById(file.replace(".svg", ""))!;
    lines.push(`<li><a href="${file}">${file}</a>: ${escapeHtml(def.title)}</li>`);
  }
  lines.push("</ul>");

  if (skipped.length) {
    lines.push("<h2>Skipped</h2>", "<ul>");
    for (const skip of skipped) {
      lines.push(`<li>${skip.id}: ${escapeHtml(skip.reason)}</li>`);
    }
    lines.push("</ul>");
  }

  lines.push(
    "<h2>Runs</h2>",
    "<table>",
    "<tr><th>run</th><th>seed</th><th>duration (s)</th><th>discipline</th>" +
      "<th>config sha256</th></tr>",
  );
  for (const run of runs) {
    lines.push(
      `<tr><td>${escapeHtml(run.name)}</td><td>${run.meta.seed}</td>` +
        `<td>${run.meta.durationS}</td><td>${escapeHtml(run.meta.discipline)}</td>` +
        `<td><code>${run.configDigest.slice(0, 16)}</code></td></tr>`,
    );
  }
  lines.push("</table>", "</body>", "</html>", "");
  return lines.join("\n");
}
