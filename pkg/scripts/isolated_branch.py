"""Folded resonance curve and detached forced-response branch (force on mass 2).

Steps:
1. arclength-trace the phase-lag resonance curve over lambda in [0, 5];
2. locate its folds and the resonance points at lambda = 0.93;
3. grow a forced response from each point over omega in [0.5, 2.5] and
   check which of them are connected;
4. count amplitude maxima of the forced response at lambda = 5;
5. estimate where the detached branch joins the primary one.

    python3 scripts/isolated_branch.py --out results/isolated_branch
"""

import argparse
import time
from pathlib import Path

from resonance_tracer.cli import write_branch
from resonance_tracer.model import twodof_model
from resonance_tracer.studies import merge_parameter, probe_isolated_branch, response_maxima


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam-star", type=float, default=0.93)
    ap.add_argument("--out", type=Path, default=Path("results/isolated_branch"))
    ap.add_argument("--skip-merge", action="store_true", help="skip the merge bisection")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    model = twodof_model(force_on=2)

    t0 = time.perf_counter()
    probe = probe_isolated_branch(model, 2, args.lam_star)
    write_branch(probe.curve, "csv", args.out / "resonance_curve.csv", full_state=True)
    print(f"resonance curve: {len(probe.curve)} points, status {probe.curve.status}")
    for tp in probe.turning_points:
        print(f"  fold at lambda = {tp.parameter:.6f} (omega = {tp.omega:.5f})")
    print(f"resonance points at lambda = {args.lam_star}:")
    for s in probe.solutions:
        print(f"  omega_res = {s.omega_res:.6f}, amplitude = {s.amplitude:.4f}")

    primary = probe.primary_index
    for i, r in enumerate(probe.responses):
        write_branch(r, "csv", args.out / f"frf_seed{i}.csv")
        tag = "primary" if i == primary else "other"
        links = ", ".join(f"{j}: {probe.connectivity(i, j)} (d={probe.distances[i, j]:.2e})"
                          for j in range(len(probe.responses)) if j != i)
        print(f"  seed {i} [{tag}] {r.status}, {len(r)} points, omega in "
              f"[{r.omegas.min():.4f}, {r.omegas.max():.4f}]; {links}")

    br5, peaks = response_maxima(model, 5.0, 2)
    write_branch(br5, "csv", args.out / "frf_lambda5.csv")
    print(f"lambda = 5: {len(peaks)} local maxima")
    for w, a in peaks:
        print(f"  omega = {w:.5f}, amplitude = {a:.4f}")

    if not args.skip_merge:
        lam_m = merge_parameter(model, 2)
        print(f"detached branch joins the primary response at lambda ~ {lam_m:.4f}")
    print(f"done in {time.perf_counter() - t0:.1f} s; branches in {args.out}")


if __name__ == "__main__":
    main()
