"""Resonance-point conditions appended to the harmonic balance equations.

The unknowns of a resonance-point problem are the extended vector
``X = [Q, omega_res]``. Two scalar closing conditions are provided:

* phase lag: the fundamental of coordinate ``k`` keeps the phase it has at the
  linear resonance (a linear condition in ``Q``, so only first derivatives of
  the nonlinear forces enter the Newton matrix);
* horizontal tangent: ``d(a_k^2 / 2)/d omega = 0`` along the forced-response
  branch (needs ``dQ/domega`` in the residual, so its Jacobian is taken by
  finite differences).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from .hbm import (
    AftGrid,
    UndefinedPhaseError,
    amplitude,
    fundamental,
    hbm_jacobians,
    hbm_residual,
    linear_response,
    response_phase,
)
from .model import natural_frequencies
from .solver import NewtonSettings, SolverError, fd_jacobian, newton_solve

PHASE_LAG = "phase-lag"
TANGENT = "horizontal-tangent"
METHODS = (PHASE_LAG, TANGENT)


class SingularResonanceError(np.linalg.LinAlgError):
    pass


class TurningPointError(np.linalg.LinAlgError):
    """``dR/dQ`` is singular: the forced-response branch has a vertical tangent."""


class IllConditionedConditionError(ValueError):
    pass


class InvalidResonanceError(SolverError):
    """Newton converged to a point that is not a resonance (``omega_res <= 0``).

    At ``omega = 0`` the forced response does not depend on frequency, so the
    horizontal-tangent condition is satisfied trivially; this catches that
    spurious root.
    """


@dataclass(frozen=True)
class ExtendedState:
    q: np.ndarray
    omega_res: float

    def __post_init__(self):
        if not self.omega_res > 0:
            raise ValueError(f"omega_res must be positive, got {self.omega_res}")

    @property
    def vector(self) -> np.ndarray:
        return np.append(self.q, self.omega_res)

    @classmethod
    def from_vector(cls, X) -> "ExtendedState":
        X = np.asarray(X, dtype=float)
        return cls(X[:-1].copy(), float(X[-1]))


@dataclass(frozen=True)
class PhaseLagCondition:
    """Fix the phase of coordinate ``k`` (1-based) to ``phi_ref``.

    ``form="normalized"`` uses ``cos(phi) Q1s - sin(phi) Q1c``;
    ``form="tangent"`` the equivalent ``Q1s - tan(phi) Q1c``, which degrades as
    ``phi_ref`` approaches +-pi/2.
    """

    phi_ref: float
    k: int
    form: str = "normalized"

    def __post_init__(self):
        if not -np.pi < self.phi_ref <= np.pi:
            raise ValueError(f"phi_ref must lie in (-pi, pi], got {self.phi_ref}")
        if self.form not in ("normalized", "tangent"):
            raise ValueError(f"unknown form {self.form!r}")
        if self.form == "tangent" and abs(np.cos(self.phi_ref)) < 1e-3:
            raise IllConditionedConditionError(
                "tangent form is ill-conditioned for |cos(phi_ref)| < 1e-3; use form='normalized'"
            )

    def coefficients(self) -> tuple[float, float]:
        """Weights on ``(Q1c[k], Q1s[k])``."""
        if self.form == "tangent":
            return -np.tan(self.phi_ref), 1.0
        return -np.sin(self.phi_ref), np.cos(self.phi_ref)

    def g_vector(self, nh: int, ndof: int) -> np.ndarray:
        """Row vector ``g`` with ``r = g . X`` (last entry, for omega, is zero)."""
        g = np.zeros((2 * nh + 1) * ndof + 1)
        gc, gs = self.coefficients()
        g[ndof + self.k - 1] = gc
        g[2 * ndof + self.k - 1] = gs
        return g


@dataclass(frozen=True)
class HorizontalTangentCondition:
    k: int


@dataclass
class ResonancePoint:
    lam: float
    omega_res: float
    q: np.ndarray
    amplitude: float
    phase: float
    iterations: int = 0
    residual_norm: float = 0.0


def modal_damping_ratio(model, mode_index: int = 1) -> float:
    """Modal damping ratio of mode ``mode_index`` (damping assumed modal)."""
    w2, V = scipy.linalg.eigh(model.stiffness, model.mass)
    phi = V[:, mode_index - 1]
    w0 = np.sqrt(max(w2[mode_index - 1], 0.0))
    return float(phi @ model.damping @ phi / (2.0 * w0 * (phi @ model.mass @ phi)))


def first_harmonic_block(model, omega: float) -> np.ndarray:
    """``[[K - w^2 M, w C], [-w C, K - w^2 M]]``."""
    A = model.stiffness - omega**2 * model.mass
    B = omega * model.damping
    return np.block([[A, B], [-B, A]])


def linear_reference_phase(model, mode_index: int = 1, k: int = 1,
                           lam: float = 0.0, peak: str = "undamped"):
    """Phase of coordinate ``k`` at the linear resonance of mode ``mode_index``.

    Returns ``(phi_ref, omega_res_lin)``. The resonance frequency is the
    undamped natural frequency, or ``w0 sqrt(1 - 2 zeta^2)`` with
    ``peak="damped"``.
    """
    omegas = natural_frequencies(model.mass, model.stiffness)
    if not 1 <= mode_index <= len(omegas):
        raise IndexError(f"mode {mode_index} outside [1, {len(omegas)}]")
    w0 = float(omegas[mode_index - 1])
    if peak == "damped":
        zeta = modal_damping_ratio(model, mode_index)
        w0 = w0 * np.sqrt(1.0 - 2.0 * zeta**2)
    elif peak != "undamped":
        raise ValueError(f"peak must be 'undamped' or 'damped', got {peak!r}")

    fc, fs = model.excitation_vectors(lam)
    if not (np.any(fc) or np.any(fs)) and model.excitation.is_bound:
        # phase is scale invariant; any nonzero parameter value will do
        fc, fs = model.excitation_vectors(1.0)
    if not (np.any(fc) or np.any(fs)):
        raise ValueError("excitation is zero; reference phase undefined")
    S1 = first_harmonic_block(model, w0)
    try:
        cs = np.linalg.solve(S1, np.concatenate([fc, fs]))
    except np.linalg.LinAlgError:
        raise SingularResonanceError(
            "first-harmonic dynamic stiffness is singular at the natural frequency; "
            "add damping to the model"
        ) from None
    if np.linalg.cond(S1) > 1e14:
        raise SingularResonanceError(
            "first-harmonic dynamic stiffness is numerically singular; add damping"
        )
    n = model.ndof
    Q = np.concatenate([np.zeros(n), cs])
    return response_phase(Q, k, n), w0


def linear_resonance_state(model, nh: int, mode_index: int = 1, lam: float = 0.0,
                           peak: str = "undamped") -> np.ndarray:
    """Extended vector ``[Q_lin(w0), w0]`` used to seed resonance tracing."""
    _, w0 = linear_reference_phase(model, mode_index, 1, lam, peak)
    return np.append(linear_response(model, w0, nh, lam), w0)


def _split(X):
    X = np.asarray(X, dtype=float)
    return X[:-1], float(X[-1])


def phase_lag_residual(X, lam, condition: PhaseLagCondition, model, grid: AftGrid):
    Q, omega = _split(X)
    g = condition.g_vector(grid.nh, model.ndof)
    return np.append(hbm_residual(Q, omega, lam, model, grid), g @ np.asarray(X, dtype=float))


def phase_lag_jacobian(X, lam, condition: PhaseLagCondition, model, grid: AftGrid):
    Q, omega = _split(X)
    dRdQ, dRdw = hbm_jacobians(Q, omega, lam, model, grid)
    n = Q.size
    J = np.zeros((n + 1, n + 1))
    J[:n, :n] = dRdQ
    J[:n, n] = dRdw
    J[n] = condition.g_vector(grid.nh, model.ndof)
    return J


def branch_tangent(Q, omega, lam, model, grid):
    """``dQ/domega`` along the forced-response branch."""
    dRdQ, dRdw = hbm_jacobians(Q, omega, lam, model, grid)
    try:
        u = -np.linalg.solve(dRdQ, dRdw)
    except np.linalg.LinAlgError:
        raise TurningPointError("dR/dQ is singular (vertical tangent in omega)") from None
    if not np.all(np.isfinite(u)):
        raise TurningPointError("dR/dQ is singular (vertical tangent in omega)")
    return u


def horizontal_tangent_residual(X, lam, condition, model, grid: AftGrid):
    """HBM residual extended by ``a_k * da_k/domega``."""
    Q, omega = _split(X)
    n = model.ndof
    u = branch_tangent(Q, omega, lam, model, grid)
    c, s = fundamental(Q, condition.k, n)
    uc, us = fundamental(u, condition.k, n)
    return np.append(hbm_residual(Q, omega, lam, model, grid), c * uc + s * us)


class ResonanceProblem:
    """Resonance-point equations for one method, parameterized by ``lambda``.

    Exposes the ``residual(x, p)`` / ``jacobian(x, p)`` interface used by the
    continuation drivers, with ``x = [Q, omega_res]`` and ``p = lambda``.
    """

    kind = "resonance"

    def __init__(self, model, grid: AftGrid, condition, method: str | None = None,
                 fd_step: float = 1e-7, mode_index: int = 1):
        if method is None:
            method = PHASE_LAG if isinstance(condition, PhaseLagCondition) else TANGENT
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        if method == PHASE_LAG and not isinstance(condition, PhaseLagCondition):
            raise TypeError("phase-lag method needs a PhaseLagCondition")
        self.model = model
        self.grid = grid
        self.condition = condition
        self.method = method
        self.k = condition.k
        self.fd_step = fd_step
        self.mode_index = mode_index

    @classmethod
    def phase_lag(cls, model, nh: int, k: int, mode_index: int = 1, form="normalized",
                  nt=None, lam_ref: float = 0.0):
        phi, _ = linear_reference_phase(model, mode_index, k, lam_ref)
        return cls(model, AftGrid(nh, nt), PhaseLagCondition(phi, k, form),
                   mode_index=mode_index)

    @classmethod
    def tangent(cls, model, nh: int, k: int, nt=None, mode_index: int = 1):
        return cls(model, AftGrid(nh, nt), HorizontalTangentCondition(k), TANGENT,
                   mode_index=mode_index)

    def start_state(self, lam: float = 0.0) -> np.ndarray:
        """Linear resonance of the tracked mode, the usual seed at ``lam``."""
        return linear_resonance_state(self.model, self.grid.nh, self.mode_index, lam)

    @property
    def size(self) -> int:
        return (2 * self.grid.nh + 1) * self.model.ndof + 1

    def residual(self, X, lam):
        if self.method == PHASE_LAG:
            return phase_lag_residual(X, lam, self.condition, self.model, self.grid)
        return horizontal_tangent_residual(X, lam, self.condition, self.model, self.grid)

    def jacobian(self, X, lam):
        if self.method == PHASE_LAG:
            return phase_lag_jacobian(X, lam, self.condition, self.model, self.grid)
        return fd_jacobian(lambda x: self.residual(x, lam), X, self.fd_step)

    def param_derivative(self, X, lam):
        h = self.fd_step * max(1.0, abs(lam))
        return (self.residual(X, lam + h) - self.residual(X, lam - h)) / (2.0 * h)

    def describe(self, X, lam) -> dict:
        Q, omega = _split(X)
        n = self.model.ndof
        return {
            "omega": omega,
            "amplitude": amplitude(Q, self.k, n),
            "phase": _safe_phase(Q, self.k, n),
        }

    def validate(self, report) -> None:
        """Reject converged iterates with non-positive ``omega_res``."""
        if not report.x[-1] > 0:
            raise InvalidResonanceError(
                f"converged to omega_res={report.x[-1]:.3g} <= 0 (spurious root)", report)

    def solve(self, lam, X0, settings: NewtonSettings = NewtonSettings()) -> ResonancePoint:
        return solve_resonance_point(self, lam, X0, settings)

    def to_point(self, X, lam, iterations=0, residual_norm=0.0) -> ResonancePoint:
        Q, omega = _split(X)
        n = self.model.ndof
        return ResonancePoint(float(lam), omega, Q.copy(), amplitude(Q, self.k, n),
                              response_phase(Q, self.k, n), iterations, residual_norm)

    def descriptor(self) -> dict:
        d = {"study": "resonance", "method": self.method, "k": self.k,
             "nh": self.grid.nh, "nt": self.grid.nt, "mode_index": self.mode_index,
             "ndof": self.model.ndof, "nq": self.size - 1}
        if isinstance(self.condition, PhaseLagCondition):
            d["phi_ref"] = self.condition.phi_ref
            d["form"] = self.condition.form
        return d


def _safe_phase(Q, k, n):
    try:
        return response_phase(Q, k, n)
    except UndefinedPhaseError:
        return float("nan")


def solve_resonance_point(problem: ResonanceProblem, lam, X0,
                          settings: NewtonSettings = NewtonSettings()) -> ResonancePoint:
    """Converge one resonance point at fixed ``lam``.

    The phase-lag method uses its analytical Jacobian unless ``settings``
    requests finite differences; the horizontal-tangent method always
    differentiates numerically.
    """
    jac = None if problem.method == TANGENT else (lambda x: problem.jacobian(x, lam))
    rep = newton_solve(lambda x: problem.residual(x, lam), jac, X0, settings)
    problem.validate(rep)
    return problem.to_point(rep.x, lam, rep.iterations, rep.residual_norm)


def complexity_ratios(nh: int, ndof: int) -> tuple[Fraction, Fraction]:
    """Operation-count ratios (tangent / phase-lag) for additions and multiplications.

    Evaluated in exact rational arithmetic; convert with ``float()`` as needed.
    """
    if nh < 1 or ndof < 1:
        raise ValueError("nh and ndof must be >= 1")
    H, N = nh, ndof
    den = N * (2 * H + 1) - 1
    z_a = Fraction(8 * H**3 + 4 * H**2 * (5 * N**2 + 2), den) + Fraction(
        2 * H * (10 * N**2 - 3 * N + 1) + 5 * N**2 - 3 * N - 1, den
    )
    z_m = Fraction((2 * H + 1) * (N**3 * (6 * H + 3) + 2 * N**2 + 4 * H * (H + 1) + 2), N)
    return z_a, z_m
