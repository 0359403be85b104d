/**
 * Readers for the simulator's published run artifacts.
 *
 * A run directory holds metrics.csv (the five-column series file),
 * stats.json (counters and the run block), and scenario.resolved.cfg
 * (the exact configuration, hashed into the index page). Everything here
 * is read-only; schema problems name the offending file and column.
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { join } from "node:path";

export const METRICS_HEADER = "time_s,class,metric,value,warmup";

export class SchemaError extends Error {}

export interface MetricsRow {
  timeS: number;
  cls: string;
  metric: string;
  value: number;
  warmup: boolean;
}

export interface RunMeta {
  name: string;
  seed: number;
  durationS: number;
  warmupS: number;
  discipline: string;
  bufferBytes: number;
  red: boolean;
}

export interface RunData {
  /** Directory basename, e.g. "pq-baseline". */
  name: string;
  dir: string;
  rows: MetricsRow[];
  meta: RunMeta;
  /** sha256 of scenario.resolved.cfg, hex. */
  configDigest: string;
}

export function parseMetricsText(text: string, file: string): MetricsRow[] {
  const lines = text.split("\n");
  if (lines.length && lines[lines.length - 1] === "") lines.pop();
  if (lines.length === 0) {
    throw new SchemaError(`${file}: empty file, expected header "${METRICS_HEADER}"`);
  }
  const header = lines[0].split(",");
  const expected = METRICS_HEADER.split(",");
  for (let i = 0; i < expected.length; i++) {
    if (header[i] !== expected[i]) {
      throw new SchemaError(
        `${file}: header column ${i + 1} is "${header[i] ?? ""}", expected "${expected[i]}"`,
      );
    }
  }
  if (header.length !== expected.length) {
    throw new SchemaError(
      `${file}: header has ${header.length} columns, expected ${expected.length}`,
    );
  }
  const rows: MetricsRow[] = [];
  for (let n = 1; n < lines.length; n++) {
    const parts = lines[n].split(",");
    if (parts.length !== 5) {
      throw new SchemaError(`${file}:${n + 1}: ${parts.length} fields, expected 5`);
    }
    const timeS = Number(parts[0]);
    const value = Number(parts[3]);
    if (!Number.isFinite(timeS)) {
      throw new SchemaError(`${file}:${n + 1}: time_s is not a number: "${parts[0]}"`);
    }
    if (!Number.isFinite(value)) {
      throw new SchemaError(`${file}:${n + 1}: value is not a number: "${parts[3]}"`);
    }
    if (parts[4] !== "0" && parts[4] !== "1") {
      throw new SchemaError(`${file}:${n + 1}: warmup must be 0 or 1, got "${parts[4]}"`);
    }
    rows.push({ timeS, cls: parts[1], metric: parts[2], value, warmup: parts[4] === "1" });
  }
  return rows;
}

export function loadRun(dir: string): RunData {
  const metricsPath = join(dir, "metrics.csv");
  let text: string;
  try {
    text = readFileSync(metricsPath, "utf8");
  } catch {
    throw new SchemaError(`missing metrics file: ${metricsPath}`);
  }
  const rows = parseMetricsText(text, metricsPath);

  const statsPath = join(dir, "stats.json");
  let stats: { run?: Record<string, unknown> };
  try {
    stats = JSON.parse(readFileSync(statsPath, "utf8"));
  } catch {
    throw new SchemaError(`missing or unreadable stats file: ${statsPath}`);
  }
  const run = stats.run;
  if (!run || typeof run !== "object") {
    throw new SchemaError(`${statsPath}: missing "run" block`);
  }
  const meta: RunMeta = {
    name: String(run.name ?? ""),
    seed: Number(run.seed ?? 0),
    durationS: Number(run.duration_s ?? 0),
    warmupS: Number(run.warmup_s ?? 0),
    discipline: String(run.discipline ?? ""),
    bufferBytes: Number(run.buffer_bytes ?? 0),
    red: Boolean(run.red),
  };

  let configDigest = "";
  try {
    const cfg = readFileSync(join(dir, "scenario.resolved.cfg"));
    configDigest = createHash("sha256").update(cfg).digest("hex");
  } catch {
    configDigest = "missing";
  }

  const name = dir.replace(/\/+$/, "").split("/").pop() ?? dir;
  return { name, dir, rows, meta, configDigest };
}

/** Time series of one (metric, class), post-warm-up rows only. */
export function series(run: RunData, metric: string, cls: string): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (const row of run.rows) {
    if (row.metric === metric && row.cls === cls && !row.warmup) {
      out.push([row.timeS, row.value]);
    }
  }
  return out;
}

/**
 * Per-second means of a sample series (used for the per-packet queuing
 * delay rows; windowed metrics are plotted as published). Samples in
 * [k, k+1) land in the window labelled k+1.
 */
export function windowMeans(points: Array<[number, number]>): Array<[number, number]> {
  const sums = new Map<number, { total: number; count: number }>();
  for (const [t, v] of points) {
    const label = Math.floor(t) + 1;
    const slot = sums.get(label) ?? { total: 0, count: 0 };
    slot.total += v;
    slot.count += 1;
    sums.set(label, slot);
  }
  return [...sums.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([label, { total, count }]) => [label, total / count]);
}

/** Post-warm-up mean of a series; null when it has no samples. */
export function meanOf(points: Array<[number, number]>): number | null {
  if (points.length === 0) return null;
  let total = 0;
  for (const [, v] of points) total += v;
  return total / points.length;
}

/** The closing cumulative-drop row for one class, in bytes. */
export function dropTotalBytes(run: RunData, cls: string): number {
  for (const row of run.rows) {
    if (row.metric === "traffic_drop_total_bytes" && row.cls === cls) {
      return row.value;
    }
  }
  return 0;
}
