#!/usr/bin/env python3
"""The freezing pathology: a safeguard that vetoes every way forward.

In the elevator scenario a crowd blocks the doorway.  The collision
safeguard predicts that every straight-line rollout intersects somebody and
keeps vetoing, so the robot parks outside forever.  GSC reasons about where
the crowd is headed and slips through the gap that opens.

    python3 demos/freezing_safeguard.py
"""

from gscbench import build_scenario, controller_config, run_scenario


def main():
    for sid in ("elevator-crowd", "traffic-merge"):
        spec = build_scenario(sid)
        print(f"\n== {sid} ==")
        for kind in ("safeguarded-blend", "gsc"):
            trace, m = run_scenario(spec, controller_config(spec, kind), seed=0)
            overrides = sum(r.overrode for r in trace.records)
            goal = f"goal at step {m.steps_to_goal}" if m.steps_to_goal is not None \
                else "NEVER reached the goal"
            print(f"{kind:>18}: {goal}; collision={m.collision}; "
                  f"safeguard vetoes={overrides}; ended '{trace.terminated}'")


if __name__ == "__main__":
    main()
