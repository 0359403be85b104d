"""Strict priority vs weighted queuing on the same offered load.

Runs both baseline presets at a reduced duration and prints the per-class
mean queuing delay and delay variation side by side.  Voice and video keep
their place under either discipline; the data classes are the ones that
move.
"""

import os
import sys
import tempfile

from qosnetsim.metrics import load_summary
from qosnetsim.scenario import run_preset

DURATION = float(sys.argv[1]) if len(sys.argv) > 1 else 60.0


def run(preset: str, root: str) -> dict:
    (run_dir,) = run_preset(preset, root, duration_s=DURATION)
    return load_summary(os.path.join(run_dir, "summary.csv"))


def main() -> None:
    with tempfile.TemporaryDirectory() as root:
        pq = run("pq-baseline", root)
        wfq = run("wfq-baseline", root)

    print(f"{DURATION:.0f} s simulated, both disciplines, seed 1\n")
    print(f"{'class':<10} {'pq delay':>12} {'wfq delay':>12} "
          f"{'pq variation':>14} {'wfq variation':>14}")
    for cls in ("voice", "video", "database", "ftp"):
        pq_d = pq[(cls, "queuing_delay")][0]
        wfq_d = wfq[(cls, "queuing_delay")][0]
        pq_v = pq[(cls, "queue_delay_variation")][0]
        wfq_v = wfq[(cls, "queue_delay_variation")][0]
        print(f"{cls:<10} {pq_d * 1e3:>10.4f} ms {wfq_d * 1e3:>10.4f} ms "
              f"{pq_v:>14.3e} {wfq_v:>14.3e}")

    print("\nqueuing delay ordering, both columns: voice < data classes < video")
    for cls in ("database", "ftp"):
        gain = 1.0 - wfq[(cls, "queuing_delay")][0] / pq[(cls, "queuing_delay")][0]
        print(f"weighted queuing trims {cls} delay by {gain:.0%}")


if __name__ == "__main__":
    main()
