"""Damped Newton iteration with analytical or finite-difference Jacobians."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

log = logging.getLogger(__name__)

ResidualFn = Callable[[np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray], np.ndarray]

MAX_HALVINGS = 8


@dataclass(frozen=True)
class NewtonSettings:
    """Iteration controls.

    ``epsilon`` is an absolute bound on the 2-norm of the residual;
    ``fd_step`` is relative, scaled per component by ``max(1, |x_j|)``.
    """

    epsilon: float = 1e-8
    max_iterations: int = 50
    jacobian_mode: str = "analytical"
    fd_step: float = 1e-7
    damping: bool = True

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.jacobian_mode not in ("analytical", "finite-difference"):
            raise ValueError(f"unknown jacobian_mode {self.jacobian_mode!r}")


@dataclass
class SolveReport:
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    history: list = field(default_factory=list, repr=False)


class SolverError(RuntimeError):
    """Newton failure; ``report`` holds the last iterate."""

    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


class SingularJacobianError(SolverError):
    pass


class NoConvergenceError(SolverError):
    pass


def fd_jacobian(residual: ResidualFn, x, fd_step: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian, one column per unknown."""
    x = np.asarray(x, dtype=float)
    r0 = np.asarray(residual(x))
    J = np.empty((r0.size, x.size))
    for j in range(x.size):
        h = fd_step * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.asarray(residual(xp)) - np.asarray(residual(xm))) / (2.0 * h)
    return J


def jacobian_discrepancy(residual, jacobian, x, fd_step: float = 1e-7) -> np.ndarray:
    """Elementwise ``|J - J_fd| / (1 + |J_fd|)``."""
    Ja = np.asarray(jacobian(np.asarray(x, dtype=float)))
    Jfd = fd_jacobian(residual, x, fd_step)
    return np.abs(Ja - Jfd) / (1.0 + np.abs(Jfd))


def verify_jacobian(residual, jacobian, x, fd_step: float = 1e-7) -> float:
    """Largest relative discrepancy between ``jacobian`` and central differences."""
    return float(jacobian_discrepancy(residual, jacobian, x, fd_step).max())


def newton_solve(
    residual: ResidualFn,
    jacobian: Optional[JacobianFn],
    x0,
    settings: NewtonSettings = NewtonSettings(),
) -> SolveReport:
    """Solve ``residual(x) = 0`` by Newton's method.

    Without damping the plain update ``x - J^-1 r`` is taken. With damping the
    step is halved (at most 8 times) until the residual norm decreases.
    A missing ``jacobian`` or ``jacobian_mode="finite-difference"`` selects
    central differences.

    Raises
    ------
    SingularJacobianError
        The linear solve for the Newton step failed.
    NoConvergenceError
        Iteration budget exhausted, or no damped step reduced the residual.
    """
    use_fd = jacobian is None or settings.jacobian_mode == "finite-difference"
    x = np.array(x0, dtype=float)
    r = np.asarray(residual(x), dtype=float)
    norm = float(np.linalg.norm(r))
    history = [norm]

    def report(converged, it):
        return SolveReport(x.copy(), it, norm, converged, history)

    for it in range(settings.max_iterations + 1):
        if not np.isfinite(norm):
            raise NoConvergenceError("residual is not finite", report(False, it))
        if norm < settings.epsilon:
            return report(True, it)
        if it == settings.max_iterations:
            break
        J = fd_jacobian(residual, x, settings.fd_step) if use_fd else jacobian(x)
        try:
            dx = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise SingularJacobianError("singular Jacobian", report(False, it)) from None
        if not np.all(np.isfinite(dx)):
            raise SingularJacobianError("non-finite Newton step", report(False, it))

        alpha = 1.0
        for _ in range(MAX_HALVINGS + 1):
            x_try = x - alpha * dx
            r_try = np.asarray(residual(x_try), dtype=float)
            norm_try = float(np.linalg.norm(r_try))
            if not settings.damping or norm_try < norm:
                break
            alpha *= 0.5
        else:
            raise NoConvergenceError(
                f"line search stalled at |r|={norm:.3e}", report(False, it + 1)
            )
        x, r, norm = x_try, r_try, norm_try
        history.append(norm)

    raise NoConvergenceError(
        f"no convergence in {settings.max_iterations} iterations (|r|={norm:.3e})",
        report(False, settings.max_iterations),
    )
