"""What the branch-office tunnel costs the head-office database users.

Runs the comparison pair: the same internal query load with and without two
remote users reaching the shared server through the tunnel.  One remote
user's grant lets it flood the server's reply queue; the other has no grant
and is blocked at the tunnel entry, delivering nothing.
"""

import json
import os
import sys
import tempfile

from qosnetsim.metrics import load_summary
from qosnetsim.scenario import run_preset

DURATION = float(sys.argv[1]) if len(sys.argv) > 1 else 120.0


def main() -> None:
    results = {}
    with tempfile.TemporaryDirectory() as root:
        for run_dir in run_preset("vpn-compare", root, duration_s=DURATION):
            name = os.path.basename(run_dir)
            table = load_summary(os.path.join(run_dir, "summary.csv"))
            with open(os.path.join(run_dir, "stats.json")) as fh:
                stats = json.load(fh)
            results[name] = (table[("database", "throughput_Bps")][0], stats)

    off, _ = results["vpn-off"]
    on, stats = results["vpn-on"]
    print(f"{DURATION:.0f} s simulated, seed 1\n")
    print(f"internal database throughput, tunnel idle : {off:>8.1f} B/s")
    print(f"internal database throughput, tunnel busy : {on:>8.1f} B/s")
    print(f"remote load keeps {on / off:.1%} of the replies flowing inward\n")

    blocked = stats["counters"]["blocked_packets"].get("database", 0)
    r2 = stats["delivered_bytes_by_source"].get("r_user2", 0)
    print(f"ungranted remote user: {blocked} requests blocked at the tunnel "
          f"entry, {r2} bytes delivered")


if __name__ == "__main__":
    main()
