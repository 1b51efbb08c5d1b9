"""Parameter continuation of frequency responses and resonance curves.

Both drivers work on a *problem* object exposing

* ``residual(x, p)`` and ``jacobian(x, p)`` (derivative with respect to ``x``),
* ``param_derivative(x, p)``,
* ``describe(x, p)`` returning ``omega``, ``amplitude`` and ``phase``,
* ``descriptor()`` for output metadata.

:class:`FrequencyResponseProblem` (``x = Q``, ``p = omega``) and
:class:`resonance_tracer.resonance.ResonanceProblem` (``x = [Q, omega_res]``,
``p = lambda``) implement it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .hbm import (
    AftGrid,
    amplitude,
    hbm_jacobians,
    hbm_residual,
    linear_response,
    response_phase,
)
from .solver import NewtonSettings, SolverError, newton_solve

log = logging.getLogger(__name__)

SEQUENTIAL = "sequential"
ARCLENGTH = "arclength"


@dataclass(frozen=True)
class ContinuationSettings:
    """Step control for both drivers.

    Arclength steps are measured in scaled coordinates: unknowns divided by
    ``max(1, |x|_inf)`` and the parameter by the window width.
    """

    mode: str = ARCLENGTH
    initial_step: float = 1e-2
    min_step: float = 1e-7
    max_step: float = 5e-2
    n_opt: int = 4
    window: tuple[float, float] = (0.0, 1.0)
    max_points: int = 20000
    corrector: NewtonSettings = NewtonSettings(max_iterations=12)

    def __post_init__(self):
        if not 0 < self.min_step <= self.initial_step <= self.max_step:
            raise ValueError("need 0 < min_step <= initial_step <= max_step")
        if self.window[1] < self.window[0]:
            raise ValueError("window must be (lower, upper) with lower <= upper")
        if self.mode not in (SEQUENTIAL, ARCLENGTH):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class BranchPoint:
    x: np.ndarray
    parameter: float
    omega: float
    amplitude: float
    phase: float
    residual_norm: float = 0.0
    step: float = 0.0
    iterations: int = 0


@dataclass
class Branch:
    points: list = field(default_factory=list)
    descriptor: dict = field(default_factory=dict)
    status: str = "complete"
    message: str = ""
    failure_index: int | None = None
    rejected_iterations: int = 0

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def __iter__(self):
        return iter(self.points)

    @property
    def ok(self) -> bool:
        return self.failure_index is None and self.status not in ("failed", "step-underflow")

    @property
    def closed(self) -> bool:
        return self.status == "closed"

    @property
    def parameters(self) -> np.ndarray:
        return np.array([p.parameter for p in self.points])

    @property
    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.points])

    @property
    def phases(self) -> np.ndarray:
        return np.array([p.phase for p in self.points])

    def coefficient_matrix(self) -> np.ndarray:
        """Rows of harmonic coefficients ``Q`` (omega stripped for resonance branches)."""
        nq = self.descriptor.get("nq")
        return np.array([p.x[:nq] if nq else p.x for p in self.points])


class FrequencyResponseProblem:
    """Forced response at fixed ``lambda`` with ``omega`` as the parameter."""

    kind = "frf"

    def __init__(self, model, grid: AftGrid, lam: float, k: int):
        self.model = model
        self.grid = grid
        self.lam = lam
        self.k = k

    def residual(self, Q, omega):
        return hbm_residual(Q, omega, self.lam, self.model, self.grid)

    def jacobian(self, Q, omega):
        return hbm_jacobians(Q, omega, self.lam, self.model, self.grid)[0]

    def param_derivative(self, Q, omega):
        return hbm_jacobians(Q, omega, self.lam, self.model, self.grid)[1]

    def describe(self, Q, omega) -> dict:
        n = self.model.ndof
        a = amplitude(Q, self.k, n)
        return {"omega": float(omega), "amplitude": a,
                "phase": response_phase(Q, self.k, n) if a > 0 else float("nan")}

    def to_point(self, Q, omega, iterations=0, residual_norm=0.0):
        return (np.asarray(Q).copy(), float(omega))

    def descriptor(self) -> dict:
        return {"study": "frf", "lambda": self.lam, "k": self.k, "nh": self.grid.nh,
                "nt": self.grid.nt, "ndof": self.model.ndof,
                "nq": (2 * self.grid.nh + 1) * self.model.ndof}


def _make_point(problem, x, p, norm=0.0, step=0.0, iterations=0) -> BranchPoint:
    info = problem.describe(x, p)
    return BranchPoint(np.array(x, dtype=float), float(p), info["omega"], info["amplitude"],
                       info["phase"], float(norm), float(step), int(iterations))


def _descriptor(problem, settings, mode) -> dict:
    d = dict(problem.descriptor())
    if "ndof" not in d:
        d["ndof"] = problem.model.ndof
    if "nq" not in d:
        d["nq"] = (2 * problem.grid.nh + 1) * problem.model.ndof
    d.update({"mode": mode, "window": list(settings.window)})
    return d


def _solve_fixed(problem, x0, p, newton: NewtonSettings):
    jac = None if getattr(problem, "method", None) == "horizontal-tangent" else (
        lambda x: problem.jacobian(x, p))
    rep = newton_solve(lambda x: problem.residual(x, p), jac, x0, newton)
    _validate(problem, rep)
    return rep


def _validate(problem, report):
    check = getattr(problem, "validate", None)
    if check is not None:
        check(report)


def _spent(exc) -> int:
    report = getattr(exc, "report", None)
    return report.iterations if report is not None else 0


def sequential_continuation(problem, x0, steps, settings: ContinuationSettings | None = None,
                            newton: NewtonSettings = NewtonSettings()) -> Branch:
    """Step the parameter through ``steps``, seeding each solve with the last solution.

    Stops at the first failed solve; the partial branch is returned with
    ``failure_index`` set to the offending step.
    """
    settings = settings or ContinuationSettings(mode=SEQUENTIAL,
                                                window=(float(np.min(steps)), float(np.max(steps))))
    branch = Branch(descriptor=_descriptor(problem, settings, SEQUENTIAL))
    x = np.asarray(x0, dtype=float)
    prev = None
    for i, p in enumerate(steps):
        try:
            rep = _solve_fixed(problem, x, p, newton)
        except (SolverError, np.linalg.LinAlgError) as exc:
            branch.rejected_iterations += _spent(exc)
            branch.status = "failed"
            branch.failure_index = i
            branch.message = f"no convergence at parameter {p:.10g}: {exc}"
            log.info(branch.message)
            break
        x = rep.x
        step = 0.0 if prev is None else float(p - prev)
        branch.points.append(_make_point(problem, x, p, rep.residual_norm, step, rep.iterations))
        prev = p
    return branch


class _Scaler:
    def __init__(self, x_scale: float, p_scale: float):
        self.sx = x_scale
        self.sp = p_scale

    def z(self, x, p):
        return np.append(np.asarray(x) / self.sx, p / self.sp)

    def xp(self, z):
        return z[:-1] * self.sx, z[-1] * self.sp


def _augmented(problem, x, p, sc: _Scaler):
    """``[J, R_p]`` with respect to the scaled variables."""
    J = problem.jacobian(x, p) * sc.sx
    Rp = problem.param_derivative(x, p) * sc.sp
    return np.column_stack([J, Rp])


def branch_direction(problem, x, p, sc: _Scaler, reference) -> np.ndarray:
    """Unit tangent of the solution curve (scaled), oriented along ``reference``."""
    A = _augmented(problem, x, p, sc)
    reference = np.asarray(reference, dtype=float)
    M = np.vstack([A, reference])
    rhs = np.zeros(M.shape[0])
    rhs[-1] = 1.0
    try:
        t = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        t = np.linalg.svd(A)[2][-1]
    t /= np.linalg.norm(t)
    return t if t @ reference >= 0 else -t


def _corrector(problem, z_pred, t, sc: _Scaler, newton: NewtonSettings):
    x_pred, p_pred = sc.xp(z_pred)
    n = x_pred.size

    def res(v):
        x, p = v[:n], v[n]
        c = t @ (sc.z(x, p) - z_pred)
        return np.append(problem.residual(x, p), c)

    def jac(v):
        x, p = v[:n], v[n]
        A = np.column_stack([problem.jacobian(x, p), problem.param_derivative(x, p)])
        row = np.append(t[:-1] / sc.sx, t[-1] / sc.sp)
        return np.vstack([A, row])

    rep = newton_solve(res, jac, np.append(x_pred, p_pred), newton)
    _validate(problem, rep)
    return rep


def arclength_continuation(problem, x0, p0, settings: ContinuationSettings,
                           direction: float = 1.0, max_points: int | None = None) -> Branch:
    """Pseudo-arclength predictor-corrector continuation from a converged point.

    The first predictor follows the curve tangent (oriented so the parameter
    moves along ``direction``); later predictors use the secant through the
    last two points. Steps adapt as ``h * clip(n_opt / n_used, 0.5, 2)``; a
    failed corrector halves ``h`` and the run aborts below ``min_step``.
    The run ends when the parameter leaves the window (the boundary point
    is solved exactly), when the branch closes on itself, or at
    ``max_points``.
    """
    lo, hi = settings.window
    width = hi - lo if hi > lo else 1.0
    max_points = max_points or settings.max_points
    newton = settings.corrector
    branch = Branch(descriptor=_descriptor(problem, settings, ARCLENGTH))

    x = np.asarray(x0, dtype=float)
    p = float(p0)
    rep = _solve_fixed(problem, x, p, newton)
    x = rep.x
    branch.points.append(_make_point(problem, x, p, rep.residual_norm, 0.0, rep.iterations))

    sc = _Scaler(max(1.0, np.abs(x).max()), width)
    ref = np.zeros(x.size + 1)
    ref[-1] = np.sign(direction) or 1.0
    t = branch_direction(problem, x, p, sc, ref)
    z = sc.z(x, p)
    z_start = z.copy()
    h = settings.initial_step
    travelled = 0.0

    while len(branch.points) < max_points:
        z_pred = z + h * t
        try:
            rep = _corrector(problem, z_pred, t, sc, newton)
            v = rep.x
            z_new = sc.z(v[:-1], v[-1])
            dz = z_new - z
            dist = np.linalg.norm(dz)
            if dz @ t <= 0 or dist > 2.0 * h:
                raise SolverError("corrector left the predictor neighbourhood", rep)
        except (SolverError, np.linalg.LinAlgError) as exc:
            branch.rejected_iterations += _spent(exc)
            h *= 0.5
            if h < settings.min_step:
                branch.status = "step-underflow"
                branch.message = f"step size fell below {settings.min_step:g}: {exc}"
                branch.failure_index = len(branch.points)
                log.info(branch.message)
                return branch
            continue

        x_new, p_new = v[:-1], float(v[-1])
        if p_new > hi or p_new < lo:
            edge = hi if p_new > hi else lo
            frac = (edge - branch.points[-1].parameter) / (p_new - branch.points[-1].parameter)
            x_edge = x + frac * (x_new - x)
            try:
                rep_e = _solve_fixed(problem, x_edge, edge, newton)
                branch.points.append(_make_point(problem, rep_e.x, edge, rep_e.residual_norm,
                                                 h, rep_e.iterations))
                branch.status = "window-end"
            except (SolverError, np.linalg.LinAlgError) as exc:
                branch.status = "window-end"
                branch.message = f"boundary point not converged: {exc}"
                branch.failure_index = len(branch.points)
            return branch

        travelled += dist
        branch.points.append(_make_point(problem, x_new, p_new, rep.residual_norm, h,
                                         rep.iterations))
        if travelled > 4.0 * settings.max_step and len(branch.points) > 8:
            # closed loop: back within one step of the start
            if np.linalg.norm(z_new - z_start) < max(h, settings.min_step):
                branch.status = "closed"
                return branch

        x, p, z, t = x_new, p_new, z_new, dz / dist
        sx = max(1.0, np.abs(x).max())
        if sx != sc.sx:
            d = np.append(t[:-1] * sc.sx, t[-1] * sc.sp)
            sc = _Scaler(sx, width)
            t = np.append(d[:-1] / sc.sx, d[-1] / sc.sp)
            t /= np.linalg.norm(t)
            z = sc.z(x, p)
            z_start = sc.z(branch.points[0].x, branch.points[0].parameter)
        n_used = max(rep.iterations, 1)
        h = float(np.clip(h * np.clip(settings.n_opt / n_used, 0.5, 2.0),
                          settings.min_step, settings.max_step))

    branch.status = "max-points"
    return branch


@dataclass
class TurningPoint:
    index: int
    parameter: float
    omega: float
    amplitude: float
    x: np.ndarray | None = None


def _dp_sign(problem, x, p, sc, reference):
    return branch_direction(problem, x, p, sc, reference)[-1]


def find_turning_points(branch: Branch, problem=None, tol: float = 1e-6,
                        newton: NewtonSettings = NewtonSettings()) -> list[TurningPoint]:
    """Folds in the active parameter along ``branch``.

    A fold is flagged where consecutive parameter increments change sign.
    With ``problem`` given, each fold is refined by bisection on the
    arclength between the neighbouring points until the bracketing parameter
    values agree to ``tol``; otherwise a parabola through the three points
    around the extreme sample gives the estimate.
    """
    pts = branch.points
    p = branch.parameters
    found = []
    for i in range(1, len(pts) - 1):
        d0, d1 = p[i] - p[i - 1], p[i + 1] - p[i]
        if d0 * d1 >= 0 or d0 == 0:
            continue
        if problem is None:
            found.append(_parabolic_turning_point(branch, i))
        else:
            try:
                found.append(_refine_turning_point(branch, i, problem, tol, newton))
            except (SolverError, np.linalg.LinAlgError):
                found.append(_parabolic_turning_point(branch, i))
    return found


def _parabolic_turning_point(branch, i) -> TurningPoint:
    a, b, c = branch.points[i - 1:i + 2]
    s = np.cumsum([0.0, np.linalg.norm(b.x - a.x) + abs(b.parameter - a.parameter),
                   np.linalg.norm(c.x - b.x) + abs(c.parameter - b.parameter)])
    coef = np.polyfit(s, [a.parameter, b.parameter, c.parameter], 2)
    p_star = b.parameter
    if coef[0] != 0:
        s_star = -coef[1] / (2 * coef[0])
        if s[0] <= s_star <= s[2]:
            p_star = float(np.polyval(coef, s_star))
    return TurningPoint(i, p_star, b.omega, b.amplitude, b.x.copy())


def _refine_turning_point(branch, i, problem, tol, newton) -> TurningPoint:
    a, c = branch.points[i - 1], branch.points[i + 1]
    lo, hi = branch.descriptor.get("window", [0.0, 1.0])
    width = (hi - lo) or 1.0
    sc = _Scaler(max(1.0, np.abs(a.x).max(), np.abs(c.x).max()), width)
    za, zc = sc.z(a.x, a.parameter), sc.z(c.x, c.parameter)
    chord = zc - za
    L = np.linalg.norm(chord)
    t = chord / L
    ref_sign = np.sign(branch.points[i].parameter - a.parameter)

    def point_at(s):
        rep = _corrector(problem, za + s * t, t, sc, newton)
        return rep.x[:-1], float(rep.x[-1])

    # bisect on the chord coordinate for the sign change of dp/ds
    s_lo, s_hi = 0.0, L
    p_lo, p_hi = a.parameter, c.parameter
    x_best, p_best = branch.points[i].x, branch.points[i].parameter
    for _ in range(60):
        s_mid = 0.5 * (s_lo + s_hi)
        x_m, p_m = point_at(s_mid)
        x_best, p_best = x_m, p_m
        if np.sign(_dp_sign(problem, x_m, p_m, sc, t)) == ref_sign:
            s_lo, p_lo = s_mid, p_m
        else:
            s_hi, p_hi = s_mid, p_m
        if abs(p_hi - p_best) < tol and abs(p_lo - p_best) < tol:
            break
    info = problem.describe(x_best, p_best)
    return TurningPoint(i, p_best, info["omega"], info["amplitude"], np.array(x_best))


def solutions_at_parameter(branch: Branch, p_star: float, problem,
                           newton: NewtonSettings = NewtonSettings(),
                           dedup_tol: float = 1e-6) -> list:
    """Every point of ``branch`` at parameter ``p_star``, re-converged with it frozen.

    Returns whatever ``problem.to_point`` builds (``ResonancePoint`` for
    resonance curves).
    """
    pts = branch.points
    out, seen = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        da, db = a.parameter - p_star, b.parameter - p_star
        if da * db > 0 or a.parameter == b.parameter:
            continue
        frac = da / (da - db)
        x0 = a.x + frac * (b.x - a.x)
        try:
            rep = _solve_fixed(problem, x0, p_star, newton)
        except (SolverError, np.linalg.LinAlgError):
            log.info("re-convergence failed near parameter %g", p_star)
            continue
        info = problem.describe(rep.x, p_star)
        key = np.array([info["omega"], info["amplitude"]])
        if any(np.all(np.abs(key - k) < dedup_tol) for k in seen):
            continue
        seen.append(key)
        out.append(problem.to_point(rep.x, p_star, rep.iterations, rep.residual_norm))
    return out


def _reverse_join(backward: Branch, forward: Branch) -> Branch:
    pts = list(reversed(backward.points[1:])) + list(forward.points)
    status = forward.status
    if backward.status in ("step-underflow", "failed"):
        status = backward.status
    msg = "; ".join(m for m in (backward.message, forward.message) if m)
    fail = None if status not in ("step-underflow", "failed") else 0
    return Branch(pts, forward.descriptor, status, msg, fail)


def frequency_response(model, lam: float, window, k: int,
                       settings: ContinuationSettings | None = None, nh: int = 3,
                       grid: AftGrid | None = None, seed=None) -> Branch:
    """Forced-response branch over ``omega`` in ``window`` by arclength continuation.

    Without ``seed`` the branch starts at the lower window edge from the
    linear response (ramping ``lambda`` up from zero if the direct solve
    fails). With ``seed = (Q, omega)`` it is grown in both directions from
    that point; a branch that closes on itself is traced once.
    """
    grid = grid or AftGrid(nh)
    base = settings or ContinuationSettings()
    settings = ContinuationSettings(
        mode=ARCLENGTH, initial_step=base.initial_step, min_step=base.min_step,
        max_step=base.max_step, n_opt=base.n_opt, window=tuple(window),
        max_points=base.max_points, corrector=base.corrector)
    problem = FrequencyResponseProblem(model, grid, lam, k)
    if seed is None:
        w0 = float(window[0])
        Q0 = _start_response(model, grid, lam, w0, settings.corrector)
        return arclength_continuation(problem, Q0, w0, settings)
    Q0, w0 = seed
    fwd = arclength_continuation(problem, np.asarray(Q0, dtype=float), w0, settings, +1.0)
    if fwd.closed:
        return fwd
    bwd = arclength_continuation(problem, np.asarray(Q0, dtype=float), w0, settings, -1.0)
    if bwd.closed:
        return bwd
    return _reverse_join(bwd, fwd)


def _start_response(model, grid, lam, omega, newton):
    nh = grid.nh
    problem = FrequencyResponseProblem(model, grid, lam, 1)
    Q = linear_response(model, omega, nh, lam)
    try:
        return _solve_fixed(problem, Q, omega, newton).x
    except (SolverError, np.linalg.LinAlgError):
        pass
    Q = linear_response(model, omega, nh, 0.0)
    for l in np.linspace(0.0, lam, 51)[1:]:
        Q = newton_solve(lambda q: hbm_residual(q, omega, l, model, grid),
                         lambda q: hbm_jacobians(q, omega, l, model, grid)[0], Q, newton).x
    return Q


def detect_local_maxima(branch: Branch, k: int | None = None) -> list[tuple[float, float]]:
    """Interior local maxima of the amplitude along ``branch``.

    Each is refined with a parabola through the three-point stencil in
    ``omega`` when the stencil is monotone in ``omega``; otherwise (next to a
    fold) the sample itself is reported.
    """
    if len(branch) < 3:
        return []
    w = branch.omegas
    if k is None or k == branch.descriptor.get("k"):
        a = branch.amplitudes
    else:
        ndof = branch.descriptor["ndof"]
        a = np.array([amplitude(q, k, ndof) for q in branch.coefficient_matrix()])
    peaks = []
    for i in range(1, len(a) - 1):
        if not (a[i] > a[i - 1] and a[i] >= a[i + 1]):
            continue
        ws, as_ = w[i - 1:i + 2], a[i - 1:i + 2]
        w_pk, a_pk = w[i], a[i]
        if (ws[1] - ws[0]) * (ws[2] - ws[1]) > 0:
            c2, c1, c0 = np.polyfit(ws - ws[1], as_, 2)
            if c2 < 0:
                dw = -c1 / (2 * c2)
                if min(ws) - ws[1] <= dw <= max(ws) - ws[1]:
                    w_pk, a_pk = ws[1] + dw, c0 + c1 * dw + c2 * dw**2
        peaks.append((float(w_pk), float(a_pk)))
    return peaks


def _branch_cloud(branch: Branch, w_scale, q_scale):
    Q = branch.coefficient_matrix() / q_scale
    return np.column_stack([branch.omegas / w_scale, Q])


def _point_segment_distance(P, A, B):
    """Distances from each row of ``P`` to every segment ``A_j B_j``; returns the minimum."""
    AB = B - A
    denom = np.einsum("ij,ij->i", AB, AB)
    denom[denom == 0] = 1.0
    best = np.inf
    for p in P:
        t = np.clip(np.einsum("ij,ij->i", p - A, AB) / denom, 0.0, 1.0)
        d = np.linalg.norm(A + t[:, None] * AB - p, axis=1).min()
        best = min(best, d)
    return best


def branch_distance(branch_a: Branch, branch_b: Branch) -> float:
    """Smallest point-to-polyline distance between two branches.

    Coordinates are ``omega`` and the harmonic coefficients, scaled by the
    largest ``|omega|`` and ``max(1, |Q|_inf)`` seen on either branch.
    """
    w_scale = max(np.abs(branch_a.omegas).max(), np.abs(branch_b.omegas).max(), 1e-12)
    q_scale = max(1.0, np.abs(branch_a.coefficient_matrix()).max(),
                  np.abs(branch_b.coefficient_matrix()).max())
    A = _branch_cloud(branch_a, w_scale, q_scale)
    B = _branch_cloud(branch_b, w_scale, q_scale)
    if len(A) == 1 and len(B) == 1:
        return float(np.linalg.norm(A[0] - B[0]))
    d = np.inf
    if len(B) > 1:
        d = min(d, _point_segment_distance(A, B[:-1], B[1:]))
    if len(A) > 1:
        d = min(d, _point_segment_distance(B, A[:-1], A[1:]))
    return float(d)


CONNECTED = "connected"
DISCONNECTED = "disconnected"


def branch_connectivity(branch_a: Branch, branch_b: Branch, tolerance: float = 1e-3) -> str:
    """``"connected"`` if the branches come within ``tolerance`` of each other."""
    return CONNECTED if branch_distance(branch_a, branch_b) <= tolerance else DISCONNECTED


def dense_sweep_maximum(model, lam: float, k: int, omega_near: float, Q_near,
                        d_omega: float = 1e-5, nh: int = 3, grid: AftGrid | None = None,
                        lead: float = 3e-3, max_steps: int = 200000,
                        newton: NewtonSettings = NewtonSettings()):
    """Amplitude maximum of the forced response near ``omega_near`` by a fine sweep.

    The response at ``(Q_near, omega_near)`` is walked down to
    ``omega_near * (1 - lead)``, then swept upward in steps of ``d_omega``
    until the amplitude has clearly passed its peak (or the branch folds
    away). The largest sample is refined by a parabola through its two
    neighbours.

    Returns
    -------
    omega_peak, amplitude_peak : float
    """
    grid = grid or AftGrid(nh)
    problem = FrequencyResponseProblem(model, grid, lam, k)
    w_start = omega_near * (1.0 - lead)
    down = np.linspace(omega_near, w_start, max(2, int(np.ceil(lead * omega_near / 1e-4)) + 1))
    walk = sequential_continuation(problem, Q_near, down, newton=newton)
    if not walk.ok:
        raise RuntimeError(f"could not walk down to omega={w_start:g}: {walk.message}")
    Q = walk.points[-1].x
    amps, omegas = [], []
    for i in range(max_steps):
        w = w_start + i * d_omega
        try:
            Q = _solve_fixed(problem, Q, w, newton).x
        except (SolverError, np.linalg.LinAlgError):
            break
        amps.append(amplitude(Q, k, model.ndof))
        omegas.append(w)
        j = int(np.argmax(amps))
        if len(amps) - j > 50 and amps[-1] < amps[j] * (1 - 1e-4):
            break
    amps = np.array(amps)
    j = int(np.argmax(amps))
    if 0 < j < len(amps) - 1:
        a0, a1, a2 = amps[j - 1:j + 2]
        curv = a0 - 2 * a1 + a2
        if curv < 0:
            off = 0.5 * (a0 - a2) / curv
            return omegas[j] + off * d_omega, a1 - 0.25 * (a0 - a2) * off
    return omegas[j], float(amps[j])


def resonance_curve(problem, window, step: float = 1e-3, mode: str = SEQUENTIAL,
                    settings: ContinuationSettings | None = None, X0=None,
                    newton: NewtonSettings = NewtonSettings()) -> Branch:
    """Resonance curve of ``problem`` over the parameter ``window``.

    Sequential mode solves at ``lo, lo + step, ..., hi``. Arclength mode
    starts with arclength ``step`` (scaled units) and uses ``settings`` for
    the remaining step control. The seed defaults to the linear resonance
    of the tracked mode at the window start.
    """
    lo, hi = map(float, window)
    if X0 is None:
        X0 = problem.start_state(lo)
    if mode == SEQUENTIAL:
        n = int(round((hi - lo) / step)) if hi > lo else 0
        steps = lo + step * np.arange(n + 1)
        steps[-1] = min(steps[-1], hi) if n else lo
        return sequential_continuation(problem, X0, steps, newton=newton)
    base = settings or ContinuationSettings()
    settings = ContinuationSettings(
        mode=ARCLENGTH, initial_step=min(step, base.max_step), min_step=min(base.min_step, step),
        max_step=base.max_step, n_opt=base.n_opt, window=(lo, hi),
        max_points=base.max_points, corrector=base.corrector)
    return arclength_continuation(problem, X0, lo, settings)
