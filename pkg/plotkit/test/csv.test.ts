import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  SchemaError,
  dropTotalBytes,
  loadRun,
  meanOf,
  parseMetricsText,
  series,
  windowMeans,
} from "../src/csv.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

const GOOD = [
  "time_s,class,metric,value,warmup",
  "1.000000,voice,queuing_delay,0.000100,1",
  "3.000000,voice,queuing_delay,0.000300,0",
  "4.000000,video,queuing_delay,0.002000,0",
  "",
].join("\n");

describe("parseMetricsText", () => {
  it("parses rows with trimmed types", () => {
    const rows = parseMetricsText(GOOD, "x.csv");
    expect(rows).toHaveLength(3);
    expect(rows[0]).toEqual({
      timeS: 1.0, cls: "voice", metric: "queuing_delay",
      value: 0.0001, warmup: true,
    });
    expect(rows[1].warmup).toBe(false);
  });

  it("names the file and column on a header mismatch", () => {
    const bad = GOOD.replace("metric", "measurement");
    expect(() => parseMetricsText(bad, "runs/metrics.csv")).toThrowError(
      /runs\/metrics\.csv: header column 3 is "measurement", expected "metric"/,
    );
  });

  it("rejects extra header columns", () => {
    const bad = GOOD.replace("warmup", "warmup,comment");
    expect(() => parseMetricsText(bad, "x.csv")).toThrowError(/6 columns/);
  });

  it("names the line when a row has the wrong field count", () => {
    const bad = GOOD.replace("3.000000,voice,queuing_delay,0.000300,0",
                             "3.000000,voice,queuing_delay");
    expect(() => parseMetricsText(bad, "x.csv")).toThrowError(/x\.csv:3: 3 fields/);
  });

  it("rejects non-numeric values", () => {
    const bad = GOOD.replace("0.000300", "fast");
    expect(() => parseMetricsText(bad, "x.csv")).toThrowError(
      /value is not a number: "fast"/,
    );
  });

  it("rejects warmup flags other than 0 and 1", () => {
    const bad = GOOD.replace("0.000300,0", "0.000300,maybe");
    expect(() => parseMetricsText(bad, "x.csv")).toThrowError(/warmup must be 0 or 1/);
  });

  it("accepts a header-only file as zero rows", () => {
    expect(parseMetricsText("time_s,class,metric,value,warmup\n", "x.csv")).toEqual([]);
  });
});

describe("series helpers", () => {
  const rows = parseMetricsText(GOOD, "x.csv");
  const run = {
    name: "x", dir: "x", rows, configDigest: "",
    meta: { name: "x", seed: 1, durationS: 10, warmupS: 2, discipline: "pq",
            bufferBytes: 0, red: false },
  };

  it("series excludes warm-up rows", () => {
    expect(series(run, "queuing_delay", "voice")).toEqual([[3.0, 0.0003]]);
  });

  it("windowMeans buckets samples into one-second windows", () => {
    const means = windowMeans([[0.5, 2], [0.7, 4], [1.2, 6]]);
    expect(means).toEqual([[1, 3], [2, 6]]);
  });

  it("meanOf returns null for an empty series", () => {
    expect(meanOf([])).toBeNull();
    expect(meanOf([[1, 2], [2, 4]])).toBe(3);
  });
});

describe("loadRun", () => {
  it("reads rows, metadata, and the config digest from a run directory", () => {
    const dir = join(FIXTURES, "pq-baseline");
    const run = loadRun(dir);
    expect(run.name).toBe("pq-baseline");
    expect(run.meta.discipline).toBe("pq");
    expect(run.meta.durationS).toBe(12);
    expect(run.meta.warmupS).toBe(2);
    expect(run.rows.length).toBeGreaterThan(100);
    const digest = createHash("sha256")
      .update(readFileSync(join(dir, "scenario.resolved.cfg")))
      .digest("hex");
    expect(run.configDigest).toBe(digest);
  });

  it("reports a missing metrics file by path", () => {
    expect(() => loadRun(join(FIXTURES, "absent-run"))).toThrowError(SchemaError);
    expect(() => loadRun(join(FIXTURES, "absent-run"))).toThrowError(
      /absent-run\/metrics\.csv/,
    );
  });

  it("dropTotalBytes matches the closing row in the raw text", () => {
    const dir = join(FIXTURES, "buffer-3kb");
    const run = loadRun(dir);
    const text = readFileSync(join(dir, "metrics.csv"), "utf8");
    const line = text.split("\n")
      .find((l) => l.includes(",video,traffic_drop_total_bytes,"));
    expect(line).toBeDefined();
    expect(dropTotalBytes(run, "video")).toBe(Number(line!.split(",")[3]));
    expect(dropTotalBytes(run, "video")).toBeGreaterThan(0);
  });
});
