"""Newton cost of sequential tracing with either resonance condition.

For each step size, both conditions trace lambda over [0, 0.1] (force on
mass 1) from the linear resonance. Reports accepted steps, iterations per
accepted step (rejected iterations included) and whether the window was
completed.

    python3 scripts/step_robustness.py --steps 1e-3,1e-4
"""

import argparse

from resonance_tracer.model import twodof_model
from resonance_tracer.studies import iteration_cost


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", default="1e-2,1e-3,1e-4")
    ap.add_argument("--lam-max", type=float, default=0.1)
    args = ap.parse_args()
    model = twodof_model(force_on=1)
    print(f"{'step':>8} {'method':>19} {'accepted':>9} {'iter/step':>10} {'completed':>10}  note")
    for step in (float(s) for s in args.steps.split(",")):
        for c in iteration_cost(model, 2, (0.0, args.lam_max), step).values():
            print(f"{step:8.0e} {c.method:>19} {c.accepted_steps:9d} "
                  f"{c.iterations_per_accepted_step:10.3f} {str(c.completed):>10}  {c.message[:70]}")


if __name__ == "__main__":
    main()
