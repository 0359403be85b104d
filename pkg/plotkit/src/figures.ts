/**
 * The figure catalogue: which runs and columns each figure draws.
 *
 * Fixed selections, one row here per figure id:
 *
 *   fig2   pq-baseline          queuing_delay (1 s means)      all classes
 *   fig3   pq-baseline          queue_delay_variation          all classes
 *   fig4   wfq-baseline         queuing_delay (1 s means)      all classes
 *   fig5   wfq-baseline         queue_delay_variation          all classes
 *   fig6   both baselines       queuing_delay (1 s means)      ftp
 *   fig7   both baselines       queuing_delay (1 s means)      database
 *   fig8   buffer sweep         traffic_drop_total_bytes and
 *                               buffer_usage_bytes (mean)      video
 *   fig9   buffer sweep         packet_delay_variation (mean)  video
 *   fig10  buffer sweep         packet_delay_variation (mean)  voice
 *   fig13  vpn-off / vpn-on     throughput_Bps                 database
 *
 * Units on the axes: delays in ms, delay variation in ms^2, buffer and
 * drop quantities in KB, throughput in bytes/s.
 */

import {
  RunData,
  dropTotalBytes,
  meanOf,
  series,
  windowMeans,
} from "./csv.js";
import {
  BarData,
  CLASS_COLORS,
  HEIGHT,
  PAIR_COLORS,
  Series,
  barPanel,
  linePanel,
  svgDocument,
} from "./svg.js";

export interface FigureDef {
  id: string;
  title: string;
  runs: string[];
  render(loaded: Map<string, RunData>): string;
}

const CLASSES = ["voice", "video", "database", "ftp"];
const SWEEP_RUNS = ["buffer-1kb", "buffer-3kb", "buffer-5kb", "buffer-9kb", "buffer-10kb"];
const SWEEP_LABELS = ["1 KB", "3 KB", "5 KB", "9 KB", "10 KB"];

const MS = 1e3;
const MS2 = 1e6;
const KB = 1 / 1024;

function scaled(points: Array<[number, number]>, factor: number): Array<[number, number]> {
  return points.map(([t, v]) => [t, v * factor]);
}

function noSampleNotes(drawn: Series[]): string[] {
  const missing = drawn.filter((s) => s.points.length === 0).map((s) => s.label);
  return missing.length ? [`no samples: ${missing.join(", ")}`] : [];
}

function classesOverTime(run: RunData, metric: string, title: string,
                         yLabel: string, factor: number,
                         perPacket: boolean): string {
  const lines: Series[] = CLASSES.map((cls) => {
    let points = series(run, metric, cls);
    if (perPacket) points = windowMeans(points);
    return { label: cls, color: CLASS_COLORS[cls], points: scaled(points, factor) };
  });
  const panel = linePanel(
    {
      title,
      xLabel: "time (s)",
      yLabel,
      warmupEndX: run.meta.warmupS,
      xMax: run.meta.durationS,
      notes: noSampleNotes(lines),
    },
    lines,
  );
  return svgDocument([panel]);
}

function pairOverTime(a: RunData, b: RunData, cls: string, title: string): string {
  const lines: Series[] = [a, b].map((run, i) => ({
    label: `${run.meta.discipline} (${run.name})`,
    color: PAIR_COLORS[i],
    points: scaled(windowMeans(series(run, "queuing_delay", cls)), MS),
  }));
  const panel = linePanel(
    {
      title,
      xLabel: "time (s)",
      yLabel: "queuing delay (ms)",
      warmupEndX: a.meta.warmupS,
      xMax: a.meta.durationS,
      notes: noSampleNotes(lines),
    },
    lines,
  );
  return svgDocument([panel]);
}

function sweepBars(loaded: Map<string, RunData>, title: string, yLabel: string,
                   color: string,
                   pick: (run: RunData) => number | null): string {
  const bars: BarData[] = SWEEP_RUNS.map((name, i) => ({
    label: SWEEP_LABELS[i],
    value: pick(loaded.get(name)!),
  }));
  const panel = barPanel(
    { title, xLabel: "trunk buffer per class queue", yLabel },
    bars,
    color,
  );
  return svgDocument([panel]);
}

export const FIGURES: FigureDef[] = [
  {
    id: "fig2",
    title: "Queuing delay by class, strict priority",
    runs: ["pq-baseline"],
    render: (loaded) => classesOverTime(
      loaded.get("pq-baseline")!, "queuing_delay",
      "Queuing delay by class, strict priority",
      "queuing delay (ms), 1 s means", MS, true),
  },
  {
    id: "fig3",
    title: "Queuing delay variation by class, strict priority",
    runs: ["pq-baseline"],
    render: (loaded) => classesOverTime(
      loaded.get("pq-baseline")!, "queue_delay_variation",
      "Queuing delay variation by class, strict priority",
      "delay variation (ms^2)", MS2, false),
  },
  {
    id: "fig4",
    title: "Queuing delay by class, weighted queuing",
    runs: ["wfq-baseline"],
    render: (loaded) => classesOverTime(
      loaded.get("wfq-baseline")!, "queuing_delay",
      "Queuing delay by class, weighted queuing",
      "queuing delay (ms), 1 s means", MS, true),
  },
  {
    id: "fig5",
    title: "Queuing delay variation by class, weighted queuing",
    runs: ["wfq-baseline"],
    render: (loaded) => classesOverTime(
      loaded.get("wfq-baseline")!, "queue_delay_variation",
      "Queuing delay variation by class, weighted queuing",
      "delay variation (ms^2)", MS2, false),
  },
  {
    id: "fig6",
    title: "ftp queuing delay, strict priority vs weighted",
    runs: ["pq-baseline", "wfq-baseline"],
    render: (loaded) => pairOverTime(
      loaded.get("pq-baseline")!, loaded.get("wfq-baseline")!, "ftp",
      "ftp queuing delay, strict priority vs weighted"),
  },
  {
    id: "fig7",
    title: "database queuing delay, strict priority vs weighted",
    runs: ["pq-baseline", "wfq-baseline"],
    render: (loaded) => pairOverTime(
      loaded.get("pq-baseline")!, loaded.get("wfq-baseline")!, "database",
      "database queuing delay, strict priority vs weighted"),
  },
  {
    id: "fig8",
    title: "Video loss and queue occupancy across the buffer sweep",
    runs: SWEEP_RUNS,
    render: (loaded) => {
      const drops = barPanel(
        {
          title: "Video bytes dropped, whole run",
          xLabel: "",
          yLabel: "dropped (KB)",
        },
        SWEEP_RUNS.map((name, i) => ({
          label: SWEEP_LABELS[i],
          value: dropTotalBytes(loaded.get(name)!, "video") * KB,
        })),
        CLASS_COLORS.video,
        0,
        HEIGHT,
      );
      const usage = barPanel(
        {
          title: "Mean video queue occupancy",
          xLabel: "trunk buffer per class queue",
          yLabel: "occupancy (KB)",
        },
        SWEEP_RUNS.map((name, i) => {
          const mean = meanOf(series(loaded.get(name)!, "buffer_usage_bytes", "video"));
          return {
            label: SWEEP_LABELS[i],
            value: mean === null ? null : mean * KB,
          };
        }),
        "#7f7f7f",
        HEIGHT,
        HEIGHT,
      );
      return svgDocument([drops, usage], 2 * HEIGHT);
    },
  },
  {
    id: "fig9",
    title: "Video delay variation across the buffer sweep",
    runs: SWEEP_RUNS,
    render: (loaded) => sweepBars(
      loaded, "Video delay variation across the buffer sweep",
      "delay variation (ms^2)", CLASS_COLORS.video,
      (run) => {
        const mean = meanOf(series(run, "packet_delay_variation", "video"));
        return mean === null ? null : mean * MS2;
      }),
  },
  {
    id: "fig10",
    title: "Voice delay variation across the buffer sweep",
    runs: SWEEP_RUNS,
    render: (loaded) => sweepBars(
      loaded, "Voice delay variation across the buffer sweep",
      "delay variation (ms^2)", CLASS_COLORS.voice,
      (run) => {
        const mean = meanOf(series(run, "packet_delay_variation", "voice"));
        return mean === null ? null : mean * MS2;
      }),
  },
  {
    id: "fig13",
    title: "Internal database throughput, tunnel idle vs busy",
    runs: ["vpn-off", "vpn-on"],
    render: (loaded) => {
      const off = loaded.get("vpn-off")!;
      const on = loaded.get("vpn-on")!;
      const lines: Series[] = [
        {
          label: "tunnel idle (vpn-off)",
          color: PAIR_COLORS[0],
          points: series(off, "throughput_Bps", "database"),
        },
        {
          label: "tunnel busy (vpn-on)",
          color: PAIR_COLORS[1],
          points: series(on, "throughput_Bps", "database"),
        },
      ];
      const panel = linePanel(
        {
          title: "Internal database throughput, tunnel idle vs busy",
          xLabel: "time (s)",
          yLabel: "throughput (bytes/s)",
          warmupEndX: off.meta.warmupS,
          xMax: off.meta.durationS,
          notes: noSampleNotes(lines),
        },
        lines,
      );
      return svgDocument([panel]);
    },
  },
];

export function figureById(id: string): FigureDef | undefined {
  return FIGURES.find((f) => f.id === id);
}
