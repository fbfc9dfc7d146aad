#!/usr/bin/env python3
"""What a lossy operator channel does to each arbitration law.

Sweeps the drop probability on the surveillance scenario, where the operator
wants a detour through a marked region that the autonomy's route skips.
Averaging half an operator command with a direct-route plan never commits
far enough to enter the region, and loss only dilutes it further; GSC keeps
backing the detour mode even when 70% of the inputs vanish, because the
surviving ones still identify it as the likeliest intent.

    python3 demos/degraded_channel.py
"""

from gscbench import build_scenario, controller_config, run_scenario
from gscbench.scenarios import reseed_channel
from dataclasses import replace

DROPS = (0.0, 0.3, 0.7)
SEEDS = range(10)


def hit_rate(spec, kind):
    hits = 0
    for seed in SEEDS:
        _, m = run_scenario(spec, controller_config(spec, kind), seed=seed)
        hits += m.region_hits["surveillance"]
    return hits / len(SEEDS)


def main():
    base = build_scenario("lossy-surveillance")
    print(f"{'drop':>6} {'linear-blend':>14} {'gsc':>8}   (surveillance hit rate, {len(SEEDS)} seeds)")
    for drop in DROPS:
        spec = replace(base, channel=replace(base.channel, drop_probability=drop))
        lb = hit_rate(spec, "linear-blend")
        gsc = hit_rate(spec, "gsc")
        print(f"{drop:>6.1f} {lb:>14.2f} {gsc:>8.2f}")


if __name__ == "__main__":
    main()
