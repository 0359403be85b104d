"""Walk the monitored trunk's buffer from 1 KB to 10 KB under RED.

Prints, per rung: cumulative video bytes dropped, mean video occupancy of
the monitored queue, and the mean delay variation of whatever video still
gets through.  Drops shrink monotonically and vanish at the top rung, where
delivery is also at its steadiest; the smallest rung is narrower than a
frame's tail segment, so it forwards no video at all.
"""

import json
import os
import sys
import tempfile

from qosnetsim.metrics import load_summary
from qosnetsim.scenario import run_preset

DURATION = float(sys.argv[1]) if len(sys.argv) > 1 else 300.0


def main() -> None:
    print(f"{DURATION:.0f} s simulated per rung, seed 1\n")
    print(f"{'buffer':>8} {'video drop':>12} {'mean occupancy':>15} "
          f"{'delay variation':>16}")
    with tempfile.TemporaryDirectory() as root:
        for run_dir in run_preset("buffer-sweep", root, duration_s=DURATION):
            with open(os.path.join(run_dir, "stats.json")) as fh:
                stats = json.load(fh)
            counters = stats["counters"]
            dropped = (counters["dropped_red_bytes"].get("video", 0)
                       + counters["dropped_overflow_bytes"].get("video", 0))
            table = load_summary(os.path.join(run_dir, "summary.csv"))
            usage = table[("video", "buffer_usage_bytes")][0]
            pdv = table.get(("video", "packet_delay_variation"))
            cap = stats["run"]["buffer_bytes"]
            tail = f"{pdv[0]:>16.3e}" if pdv else f"{'no video through':>16}"
            print(f"{cap:>7}B {dropped:>11}B {usage:>14.0f}B {tail}")


if __name__ == "__main__":
    main()
