"""Reproduction workflows on the two-mass benchmark, shared by scripts and tests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .continuation import (
    ARCLENGTH,
    SEQUENTIAL,
    Branch,
    ContinuationSettings,
    branch_connectivity,
    branch_distance,
    dense_sweep_maximum,
    detect_local_maxima,
    find_turning_points,
    frequency_response,
    resonance_curve,
    solutions_at_parameter,
)
from .hbm import AftGrid
from .resonance import ResonanceProblem


@dataclass
class PeakCheck:
    lam: float
    omega_oracle: float
    amplitude_oracle: float
    omega_phase_lag: float
    amplitude_phase_lag: float
    omega_tangent: float
    amplitude_tangent: float

    @property
    def phase_lag_amplitude_error(self) -> float:
        return abs(self.amplitude_phase_lag - self.amplitude_oracle) / self.amplitude_oracle

    @property
    def phase_lag_frequency_error(self) -> float:
        return abs(self.omega_phase_lag - self.omega_oracle) / self.omega_oracle

    @property
    def tangent_frequency_error(self) -> float:
        return abs(self.omega_tangent - self.omega_oracle) / self.omega_oracle


def peak_accuracy(model, k: int = 2, lam_max: float = 2.0, step: float = 1e-3,
                  checks: int = 21, nh: int = 3, d_omega: float = 1e-5):
    """Phase-lag curve over ``[0, lam_max]`` compared with sweep maxima.

    The phase-lag curve is traced sequentially with ``step``. At ``checks``
    evenly spaced parameter values the horizontal-tangent point is solved
    (seeded by the phase-lag point) and the forced-response maximum is
    located by :func:`dense_sweep_maximum` seeded by the phase-lag point.

    Returns
    -------
    curve : Branch
    checks : list of PeakCheck
    """
    pl = ResonanceProblem.phase_lag(model, nh, k)
    tg = ResonanceProblem.tangent(model, nh, k)
    curve = resonance_curve(pl, (0.0, lam_max), step, SEQUENTIAL)
    if not curve.ok:
        raise RuntimeError(f"phase-lag trace failed: {curve.message}")
    lams = curve.parameters
    out = []
    for lam in np.linspace(0.0, lam_max, checks):
        p = curve.points[int(np.argmin(np.abs(lams - lam)))]
        t = tg.solve(p.parameter, p.x)
        w, a = dense_sweep_maximum(model, p.parameter, k, p.omega, p.x[:-1], d_omega, nh,
                                   pl.grid)
        out.append(PeakCheck(p.parameter, w, a, p.omega, p.amplitude, t.omega_res, t.amplitude))
    return curve, out


@dataclass
class IterationCost:
    method: str
    step: float
    accepted_steps: int
    accepted_iterations: int
    rejected_iterations: int
    completed: bool
    message: str = ""

    @property
    def iterations_per_accepted_step(self) -> float:
        """Newton iterations spent (accepted and rejected) per accepted step."""
        total = self.accepted_iterations + self.rejected_iterations
        return total / self.accepted_steps if self.accepted_steps else float("inf")

    @property
    def mean_accepted_iterations(self) -> float:
        return (self.accepted_iterations / self.accepted_steps
                if self.accepted_steps else float("nan"))


def iteration_cost(model, k: int = 2, window=(0.0, 0.1), step: float = 1e-3, nh: int = 3):
    """Sequential tracing cost of both conditions over ``window`` at ``step``.

    The solve at the window start is not counted as a step.
    """
    out = {}
    for method, problem in (("phase-lag", ResonanceProblem.phase_lag(model, nh, k)),
                            ("horizontal-tangent", ResonanceProblem.tangent(model, nh, k))):
        br = resonance_curve(problem, window, step, SEQUENTIAL)
        steps = br.points[1:]
        out[method] = IterationCost(method, step, len(steps), sum(p.iterations for p in steps),
                                    br.rejected_iterations, br.ok, br.message)
    return out


@dataclass
class IsolatedBranchProbe:
    curve: Branch
    turning_points: list
    solutions: list
    responses: list = field(default_factory=list)
    distances: np.ndarray | None = None

    def connectivity(self, i: int, j: int, tolerance: float = 1e-3) -> str:
        return branch_connectivity(self.responses[i], self.responses[j], tolerance)

    @property
    def primary_index(self) -> int:
        """Seed whose forced response reaches both ends of the omega window."""
        lo, hi = self.responses[0].descriptor["window"]
        for i, r in enumerate(self.responses):
            w = r.omegas
            if np.isclose(w.min(), lo) and np.isclose(w.max(), hi):
                return i
        raise LookupError("no forced response spans the omega window")


def probe_isolated_branch(model, k: int = 2, lam_star: float = 0.93,
                          lam_window=(0.0, 5.0), omega_window=(0.5, 2.5), nh: int = 3,
                          grow: bool = True, max_step: float = 2e-2) -> IsolatedBranchProbe:
    """Resonance curve, its folds, the points at ``lam_star`` and their forced responses."""
    problem = ResonanceProblem.phase_lag(model, nh, k)
    curve = resonance_curve(problem, lam_window, 1e-2, ARCLENGTH)
    tps = find_turning_points(curve, problem)
    sols = solutions_at_parameter(curve, lam_star, problem)
    sols.sort(key=lambda s: s.omega_res)
    probe = IsolatedBranchProbe(curve, tps, sols)
    if grow:
        settings = ContinuationSettings(window=tuple(omega_window), max_step=max_step)
        probe.responses = [
            frequency_response(model, lam_star, omega_window, k, settings, nh, problem.grid,
                               seed=(s.q, s.omega_res)) for s in sols]
        n = len(sols)
        d = np.zeros((n, n))
        for i in range(n):
            for j in range(i):
                d[i, j] = d[j, i] = branch_distance(probe.responses[i], probe.responses[j])
        probe.distances = d
    return probe


def response_maxima(model, lam: float, k: int = 2, omega_window=(0.5, 2.5), nh: int = 3,
                    max_step: float = 2e-2, band=None):
    """Local amplitude maxima of the forced response grown from the window start.

    ``band = (lo, hi)`` keeps only maxima with ``lo <= omega <= hi``.
    """
    settings = ContinuationSettings(window=tuple(omega_window), max_step=max_step)
    br = frequency_response(model, lam, omega_window, k, settings, nh, AftGrid(nh))
    peaks = detect_local_maxima(br)
    if band is not None:
        peaks = [p for p in peaks if band[0] <= p[0] <= band[1]]
    return br, peaks


def merge_parameter(model, k: int = 2, bracket=(2.0, 2.3), band=(1.2, 1.6), tol: float = 1e-3,
                    nh: int = 3) -> float:
    """Smallest ``lambda`` at which the primary forced response has >= 3 maxima in ``band``.

    Bisection on ``bracket``; the count jumps when the detached branch joins
    the primary one.
    """
    def merged(lam):
        return len(response_maxima(model, lam, k, nh=nh, band=band)[1]) >= 3

    lo, hi = bracket
    if merged(lo) or not merged(hi):
        raise ValueError(f"bracket {bracket} does not straddle the merge")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if merged(mid) else (mid, hi)
    return 0.5 * (lo + hi)


def random_states(model, nh: int, count: int, rng, lam_window=(0.0, 2.0),
                  omega_window=(0.5, 2.5), scale: float = 1.0):
    """``(Q, omega, lam)`` triples with ``Q ~ N(0, scale^2)`` coefficientwise."""
    n = (2 * nh + 1) * model.ndof
    for _ in range(count):
        yield (rng.normal(scale=scale, size=n), rng.uniform(*omega_window),
               rng.uniform(*lam_window))
