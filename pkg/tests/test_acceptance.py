"""Acceptance checks for the two-mass benchmark.

Each ``criterion_N`` returns ``(passed, detail)``. Under pytest every result
is recorded as one ``ACCEPTANCE criterion N: PASS|FAIL | detail`` line and
shown in the terminal summary; run this file directly to print the lines
without pytest.
"""

import time
from functools import lru_cache

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from resonance_tracer.continuation import (
    ARCLENGTH,
    find_turning_points,
    resonance_curve,
    solutions_at_parameter,
)
from resonance_tracer.hbm import AftGrid, aft_force, harmonic_index, hbm_jacobians, hbm_residual
from resonance_tracer.model import sdof_model, twodof_model
from resonance_tracer.resonance import ResonanceProblem, complexity_ratios
from resonance_tracer.solver import verify_jacobian
from resonance_tracer.studies import (
    iteration_cost,
    peak_accuracy,
    probe_isolated_branch,
    random_states,
    response_maxima,
)

K = 2  # monitored coordinate
NH = 3


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


@lru_cache(maxsize=None)
def peak_study():
    return timed(peak_accuracy, twodof_model(force_on=1), K, 2.0, 1e-3, 21, NH)


@lru_cache(maxsize=None)
def isolated_probe():
    return timed(probe_isolated_branch, twodof_model(force_on=2), K, 0.93)


def linear_peak(model, k):
    fc, fs = model.excitation_vectors(0.0)

    def neg_amp(w):
        Z = model.stiffness - w**2 * model.mass + 1j * w * model.damping
        return -abs(np.linalg.solve(Z, fc - 1j * fs)[k - 1])

    r = minimize_scalar(neg_amp, bounds=(0.9, 1.1), method="bounded",
                        options={"xatol": 1e-12})
    return r.x, -r.fun


def criterion_1():
    t0 = time.perf_counter()
    m = twodof_model(force_on=1)
    w_ref, a_ref = linear_peak(m, K)
    pl = ResonanceProblem.phase_lag(m, NH, K)
    tg = ResonanceProblem.tangent(m, NH, K)
    p = pl.solve(0.0, pl.start_state())
    t = tg.solve(0.0, pl.start_state())
    dt = time.perf_counter() - t0
    errs = [(abs(x.omega_res - w_ref), abs(x.amplitude - a_ref) / a_ref) for x in (p, t)]
    ok = all(dw < 1e-4 and da < 1e-4 for dw, da in errs) and dt < 1.0
    return ok, (f"phase-lag |dw|={errs[0][0]:.1e} da={errs[0][1]:.1e}; "
                f"tangent |dw|={errs[1][0]:.1e} da={errs[1][1]:.1e}; {dt:.2f} s")


def criterion_2():
    (_, checks), dt = peak_study()
    ea = max(c.phase_lag_amplitude_error for c in checks)
    ef = max(c.phase_lag_frequency_error for c in checks)
    ok = ea < 0.01 and ef < 0.0011 and dt < 120
    return ok, (f"worst amplitude error {ea:.3%} (<1%), worst frequency error {ef:.4%} "
                f"(<0.11%) over {len(checks)} lambdas; {dt:.1f} s")


def criterion_3():
    (_, checks), dt = peak_study()
    e = max(c.tangent_frequency_error for c in checks)
    return e < 1e-4 and dt < 120, f"worst tangent frequency error {e:.1e} (<1e-4); {dt:.1f} s"


def criterion_4():
    t0 = time.perf_counter()
    m = twodof_model(force_on=1)
    grid = AftGrid(NH)
    pl = ResonanceProblem.phase_lag(m, NH, K)
    rng = np.random.default_rng(4)
    worst = [0.0, 0.0, 0.0]
    for Q, w, lam in random_states(m, NH, 100, rng):
        worst[0] = max(worst[0], verify_jacobian(
            lambda q: hbm_residual(q, w, lam, m, grid),
            lambda q: hbm_jacobians(q, w, lam, m, grid)[0], Q))
        worst[1] = max(worst[1], verify_jacobian(
            lambda v: hbm_residual(Q, v[0], lam, m, grid),
            lambda v: hbm_jacobians(Q, v[0], lam, m, grid)[1][:, None], [w]))
        worst[2] = max(worst[2], verify_jacobian(
            lambda x: pl.residual(x, lam), lambda x: pl.jacobian(x, lam), np.append(Q, w)))
    dt = time.perf_counter() - t0
    ok = max(worst) < 1e-6 and dt < 30
    return ok, (f"max discrepancy dR/dQ {worst[0]:.1e}, dR/dw {worst[1]:.1e}, "
                f"extended {worst[2]:.1e} (<1e-6, 100 states each); {dt:.1f} s")


def criterion_5():
    nh = NH
    g, g2 = AftGrid(nh), AftGrid(nh, 2 * AftGrid(nh).nt)
    m = sdof_model(k_nl=1.0)

    def unit(n, f, v=1.0):
        Q = np.zeros(2 * nh + 1)
        Q[harmonic_index(n, f, 1, 1)] = v
        return Q

    cos3 = aft_force(unit(1, "c"), 1.0, 0.0, m, g) - (unit(1, "c", 0.75) + unit(3, "c", 0.25))
    sin3 = aft_force(unit(1, "s"), 1.0, 0.0, m, g) - (unit(1, "s", 0.75) + unit(3, "s", -0.25))
    closed = max(np.abs(cos3).max(), np.abs(sin3).max())
    rng = np.random.default_rng(5)
    m2 = twodof_model()
    doubling = 0.0
    for _ in range(50):
        Q = rng.normal(size=(2 * nh + 1) * 2)
        a = aft_force(Q, 1.0, 1.0, m2, g)
        b = aft_force(Q, 1.0, 1.0, m2, g2)
        doubling = max(doubling, np.abs(a - b).max() / max(1.0, np.abs(a).max()))
    ok = closed < 1e-12 and doubling < 1e-12
    return ok, f"closed-form deviation {closed:.1e}, nt {g.nt}->{g2.nt} change {doubling:.1e}"


def criterion_6():
    t0 = time.perf_counter()
    problem = ResonanceProblem.phase_lag(twodof_model(force_on=2), NH, K)
    curve = resonance_curve(problem, (0.0, 5.0), 1e-2, ARCLENGTH)
    tps = sorted(t.parameter for t in find_turning_points(curve, problem))
    sols = solutions_at_parameter(curve, 0.93, problem)
    dt = time.perf_counter() - t0
    reached = curve.ok and curve.parameters[-1] >= 5.0 - 1e-12
    fold_ok = len(tps) == 2 and abs(tps[0] - 0.64) <= 0.02 and abs(tps[1] - 2.17) <= 0.02
    ok = reached and fold_ok and len(sols) == 3 and dt < 300
    folds = ", ".join(f"{p:.4f}" for p in tps)
    return ok, (f"reached lambda=5: {reached}; {len(tps)} turning points [{folds}]; "
                f"{len(sols)} solutions at 0.93; {dt:.1f} s")


def criterion_7():
    probe, dt_probe = isolated_probe()
    t0 = time.perf_counter()
    _, maxima = response_maxima(twodof_model(force_on=2), 5.0, K)
    dt = dt_probe + time.perf_counter() - t0
    try:
        primary = probe.primary_index
    except LookupError:
        return False, "no forced response grown from the seeds spans the omega window"
    others = [i for i in range(len(probe.responses)) if i != primary]
    states = {i: probe.connectivity(primary, i) for i in others}
    detached = [i for i, s in states.items() if s == "disconnected"]
    band = [w for w, _ in maxima if 1.2 <= w <= 1.6]
    ok = bool(detached) and len(maxima) >= 3 and dt < 300
    dist = ", ".join(f"{probe.distances[primary, i]:.3g}" for i in others)
    return ok, (f"primary seed {primary}, {len(detached)}/{len(others)} other seeds "
                f"disconnected (distance {dist}); lambda=5 response has {len(maxima)} maxima "
                f"({len(band)} in 1.2<=w<=1.6); {dt:.1f} s")


def criterion_8():
    (curve, _), _ = peak_study()
    dw = np.diff(curve.omegas)
    return bool(np.all(dw > 0)), (f"{len(curve)} points, min increment {dw.min():.2e}, "
                                  f"omega_res {curve.omegas[0]:.5f} -> {curve.omegas[-1]:.5f}")


def criterion_9():
    za, zm = complexity_ratios(1, 1)
    ratio = float(complexity_ratios(100, 100)[1]) / (12 * 100**4)
    ok = za == 26.5 and zm == 63 and 0.9 <= ratio <= 1.1
    return ok, f"Z_a(1,1)={float(za)}, Z_m(1,1)={float(zm)}, Z_m/(12 H^2 N^2) at 100,100 = {ratio:.4f}"


def criterion_10():
    cost = iteration_cost(twodof_model(force_on=1), K, (0.0, 0.1), 1e-3)
    pl, tg = cost["phase-lag"], cost["horizontal-tangent"]
    ok = (pl.completed and pl.rejected_iterations == 0
          and pl.iterations_per_accepted_step <= tg.iterations_per_accepted_step)
    return ok, (f"phase-lag {pl.iterations_per_accepted_step:.2f} it/step over "
                f"{pl.accepted_steps} steps, completed={pl.completed}; tangent "
                f"{tg.iterations_per_accepted_step:.2f} it/step over {tg.accepted_steps} steps "
                f"({tg.rejected_iterations} rejected iterations), completed={tg.completed}")


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 11)}


def report_line(n, passed, detail):
    return f"ACCEPTANCE criterion {n}: {'PASS' if passed else 'FAIL'} | {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    from conftest import ACCEPTANCE_LINES

    passed, detail = CRITERIA[n]()
    line = report_line(n, passed, detail)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


if __name__ == "__main__":
    for n in sorted(CRITERIA):
        print(report_line(n, *CRITERIA[n]()), flush=True)
