"""Harmonic balance algebra on real cosine/sine coefficient vectors.

A coefficient vector of harmonic order ``nh`` for ``ndof`` coordinates is laid
out harmonic-major::

    [Q0 | Q1c | Q1s | Q2c | Q2s | ... | Qnh_s]     (each block has ndof entries)

so it reshapes to a ``(2*nh + 1, ndof)`` array whose row ``2n-1`` holds the
cosine and row ``2n`` the sine coefficients of harmonic ``n``. With this layout
Kronecker products ``A (x) B`` with ``A`` acting on harmonics and ``B`` on
coordinates apply as ``A @ Q.reshape(H, ndof) @ B.T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class UndefinedPhaseError(ValueError):
    """The fundamental harmonic of the monitored coordinate vanishes."""


def n_harmonic_rows(nh: int) -> int:
    return 2 * nh + 1


def harmonic_index(n: int, flavor: str, k: int, ndof: int) -> int:
    """0-based position of harmonic ``n`` (flavor ``"c"``/``"s"``), 1-based coordinate ``k``."""
    if not 1 <= k <= ndof:
        raise IndexError(f"coordinate {k} outside [1, {ndof}]")
    if n == 0:
        return k - 1
    if flavor == "c":
        return (2 * n - 1) * ndof + k - 1
    if flavor == "s":
        return 2 * n * ndof + k - 1
    raise ValueError(f"flavor must be 'c' or 's', got {flavor!r}")


@dataclass
class HarmonicCoefficients:
    """Coefficient vector plus its shape metadata.

    Most routines in this package take the bare ``data`` array; this wrapper
    exists for readable element access in user code and reports.
    """

    data: np.ndarray
    nh: int
    ndof: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (n_harmonic_rows(self.nh) * self.ndof,):
            raise ValueError(
                f"expected length {(2 * self.nh + 1) * self.ndof}, got {self.data.shape}"
            )

    @classmethod
    def zeros(cls, nh: int, ndof: int) -> "HarmonicCoefficients":
        return cls(np.zeros((2 * nh + 1) * ndof), nh, ndof)

    def _check_n(self, n):
        if not 0 <= n <= self.nh:
            raise IndexError(f"harmonic {n} outside [0, {self.nh}]")

    def get(self, n: int, flavor: str, k: int) -> float:
        self._check_n(n)
        return float(self.data[harmonic_index(n, flavor, k, self.ndof)])

    def set(self, n: int, flavor: str, k: int, value: float) -> None:
        self._check_n(n)
        self.data[harmonic_index(n, flavor, k, self.ndof)] = value

    def block(self, n: int, flavor: str = "c") -> np.ndarray:
        self._check_n(n)
        row = 0 if n == 0 else (2 * n - 1 if flavor == "c" else 2 * n)
        return self.data.reshape(-1, self.ndof)[row]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def derivative_matrix(omega: float, nh: int) -> np.ndarray:
    """Frequency-domain time-derivative operator on one coordinate's coefficients."""
    D = np.zeros((2 * nh + 1, 2 * nh + 1))
    for n in range(1, nh + 1):
        D[2 * n - 1, 2 * n] = n * omega
        D[2 * n, 2 * n - 1] = -n * omega
    return D


def dynamic_stiffness(model, omega: float, nh: int) -> np.ndarray:
    """``S(w) = D^2 (x) M + D (x) C + I (x) K``."""
    D = derivative_matrix(omega, nh)
    return (np.kron(D @ D, model.mass) + np.kron(D, model.damping)
            + np.kron(np.eye(2 * nh + 1), model.stiffness))


def dynamic_stiffness_domega(model, omega: float, nh: int) -> np.ndarray:
    """``dS/dw = (2 D dD/dw) (x) M + dD/dw (x) C``."""
    D = derivative_matrix(omega, nh)
    dD = derivative_matrix(1.0, nh)
    return np.kron(2.0 * D @ dD, model.mass) + np.kron(dD, model.damping)


def _smallest_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


class AftGrid:
    """Equispaced sampling of one period plus the matching transforms.

    ``synthesis`` maps harmonic rows to time samples (``nt x (2nh+1)``) and
    ``projection`` is its exact left inverse on band-limited signals (the real
    DFT truncated at ``nh``).

    Parameters
    ----------
    nh : int
        Harmonic order.
    nt : int, optional
        Samples per period, a power of two. Defaults to the smallest power of
        two that is alias-free for polynomial nonlinearities of ``degree``.
    degree : int
        Polynomial degree the grid must resolve without aliasing.
    """

    def __init__(self, nh: int, nt: int | None = None, degree: int = 3):
        if nh < 1:
            raise ValueError("harmonic order must be >= 1")
        bound = 2 * degree * nh + 2
        if nt is None:
            nt = _smallest_pow2(bound)
        if nt < bound or nt & (nt - 1):
            raise ValueError(f"nt must be a power of two >= {bound}, got {nt}")
        self.nh = nh
        self.nt = nt
        self.theta = 2.0 * np.pi * np.arange(nt) / nt
        G = np.ones((nt, 2 * nh + 1))
        for n in range(1, nh + 1):
            G[:, 2 * n - 1] = np.cos(n * self.theta)
            G[:, 2 * n] = np.sin(n * self.theta)
        P = (2.0 / nt) * G.T
        P[0] /= 2.0
        G.setflags(write=False)
        P.setflags(write=False)
        self.synthesis = G
        self.projection = P

    def __repr__(self):
        return f"AftGrid(nh={self.nh}, nt={self.nt})"

    def times(self, omega: float) -> np.ndarray:
        return self.theta / omega

    def forward(self, samples: np.ndarray) -> np.ndarray:
        """Time samples ``(nt, ndof)`` -> flat coefficient vector."""
        return (self.projection @ samples).ravel()


def _rows(Q, nh):
    Q = np.asarray(Q, dtype=float)
    return Q.reshape(2 * nh + 1, -1)


def synthesize_time(Q, omega: float, grid: AftGrid, velocity: bool = True):
    """Displacement and velocity samples at ``t_i = 2 pi i / (omega nt)``.

    Returns ``(q, qdot)`` with shape ``(nt, ndof)``; ``qdot`` is None when
    ``velocity`` is False.
    """
    Qr = _rows(Q, grid.nh)
    q = grid.synthesis @ Qr
    if not velocity:
        return q, None
    if omega <= 0:
        raise ValueError("velocity synthesis requires omega > 0")
    qdot = grid.synthesis @ (derivative_matrix(omega, grid.nh) @ Qr)
    return q, qdot


def aft_force(Q, omega: float, lam: float, model, grid: AftGrid) -> np.ndarray:
    """Nonlinear force coefficients by alternating frequency/time evaluation."""
    if model.is_linear:
        return np.zeros(np.shape(Q))
    q, qdot = synthesize_time(Q, omega, grid, velocity=model.has_velocity_dependence)
    if qdot is None:
        qdot = np.zeros_like(q)
    return grid.forward(model.nonlinear_force(q, qdot, lam))


def aft_force_jacobian(Q, omega: float, lam: float, model, grid: AftGrid):
    """``(dF/dQ, dF/domega)`` of :func:`aft_force`.

    The coefficient Jacobian is the Galerkin lift of the pointwise
    time-domain Jacobians, ``P diag(df/dq) G + P diag(df/dqdot) G D``.
    """
    size = np.size(Q)
    if model.is_linear:
        return np.zeros((size, size)), np.zeros(size)
    nh = grid.nh
    G, P = grid.synthesis, grid.projection
    vel = model.has_velocity_dependence
    q, qdot = synthesize_time(Q, omega, grid, velocity=vel)
    if qdot is None:
        qdot = np.zeros_like(q)
    dfdq, dfdv = model.nonlinear_jacobian(q, qdot, lam)
    # result[h, i, g, j] = sum_t P[h, t] J[t, i, j] G[t, g]
    J = np.einsum("ht,tij,tg->higj", P, dfdq, G, optimize=True)
    dF_dom = np.zeros(size)
    if vel:
        D = derivative_matrix(omega, nh)
        Jv = np.einsum("ht,tij,tg->higj", P, dfdv, G, optimize=True)
        J = J + np.einsum("higj,gf->hifj", Jv, D)
        dD = derivative_matrix(1.0, nh)
        Qr = _rows(Q, nh)
        dF_dom = np.einsum("higj,gj->hi", Jv, dD @ Qr).ravel()
    return J.reshape(size, size), dF_dom


def excitation_vector(model, lam: float, nh: int) -> np.ndarray:
    fc, fs = model.excitation_vectors(lam)
    F = np.zeros((2 * nh + 1, model.ndof))
    F[1], F[2] = fc, fs
    return F.ravel()


def hbm_residual(Q, omega: float, lam: float, model, grid: AftGrid) -> np.ndarray:
    """``R = S(omega) Q + F_nl(Q) - F_ex``."""
    Q = np.asarray(Q, dtype=float)
    S = dynamic_stiffness(model, omega, grid.nh)
    return S @ Q + aft_force(Q, omega, lam, model, grid) - excitation_vector(model, lam, grid.nh)


def hbm_jacobians(Q, omega: float, lam: float, model, grid: AftGrid):
    """``(dR/dQ, dR/domega)`` assembled analytically."""
    Q = np.asarray(Q, dtype=float)
    S = dynamic_stiffness(model, omega, grid.nh)
    dS = dynamic_stiffness_domega(model, omega, grid.nh)
    dF, dF_dom = aft_force_jacobian(Q, omega, lam, model, grid)
    return S + dF, dS @ Q + dF_dom


def linear_response(model, omega: float, nh: int, lam: float = 0.0) -> np.ndarray:
    """Coefficients of the linearized forced response, ``S(omega) Q = F_ex``."""
    S = dynamic_stiffness(model, omega, nh)
    return np.linalg.solve(S, excitation_vector(model, lam, nh))


def fundamental(Q, k: int, ndof: int) -> tuple[float, float]:
    """``(Q1c[k], Q1s[k])`` for 1-based ``k``."""
    Q = np.asarray(Q)
    if not 1 <= k <= ndof:
        raise IndexError(f"coordinate {k} outside [1, {ndof}]")
    return float(Q[ndof + k - 1]), float(Q[2 * ndof + k - 1])


def amplitude(Q, k: int, ndof: int | None = None) -> float:
    """Magnitude of the fundamental harmonic of coordinate ``k``."""
    if ndof is None:
        ndof = Q.ndof
    c, s = fundamental(Q, k, ndof)
    return float(np.hypot(c, s))


def response_phase(Q, k: int, ndof: int | None = None) -> float:
    """Phase ``atan2(Q1s[k], Q1c[k])`` of coordinate ``k``, in (-pi, pi].

    ``q_k ~ a cos(wt - phi)``, so a response lagging a cosine force by a
    quarter period (pure sine) has phase +pi/2.
    """
    if ndof is None:
        ndof = Q.ndof
    c, s = fundamental(Q, k, ndof)
    if c == 0.0 and s == 0.0:
        raise UndefinedPhaseError(f"fundamental harmonic of coordinate {k} is zero")
    phi = float(np.arctan2(s, c))
    return np.pi if phi == -np.pi else phi
