#!/usr/bin/env python3
"""The headline contrast: averaging two safe modes versus choosing one.

Runs the corridor scenario (two safe passages around a central pillar) under
linear blending and under GSC, prints what happened, and writes SVG renders
next to each other so the failure is visible: the blend of a left command and
a right plan points straight at the pillar.

    python3 demos/blend_vs_choose.py [out_dir]
"""

import pathlib
import sys

from gscbench import build_scenario, controller_config, run_scenario
from gscbench.render import render_svg


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "gscbench-out/demo-blend")
    out.mkdir(parents=True, exist_ok=True)
    spec = build_scenario("multimodal-corridor")
    for kind in ("linear-blend", "gsc"):
        trace, m = run_scenario(spec, controller_config(spec, kind), seed=0)
        svg = out / f"corridor-{kind}.svg"
        svg.write_text(render_svg(trace, spec))
        verdict = "COLLIDED" if m.collision else f"reached goal in {m.steps_to_goal} steps"
        print(f"{kind:>16}: {verdict}  (min clearance {m.min_clearance:+.3f} m)  -> {svg}")
    print("\nThe blend averages a left-passage command with a right-passage plan")
    print("and drives into the pillar; GSC commits to the jointly most likely")
    print("mode pair and threads one passage cleanly.")


if __name__ == "__main__":
    main()
