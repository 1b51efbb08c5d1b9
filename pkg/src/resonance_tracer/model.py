"""Mechanical model: structural matrices, nonlinear elements and excitation.

Coordinate indices are 1-based wherever they cross the public boundary
(model files, element definitions, reports) and 0-based internally.
"""

from __future__ import annotations

import json
from importlib.resources import files
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import scipy.linalg

LAMBDA = "lambda"

Bindable = Union[float, str]


class ModelError(ValueError):
    """Raised for malformed or inconsistent model definitions."""


def _resolve(value: Bindable, lam: float) -> float:
    return lam if value == LAMBDA else float(value)


@dataclass(frozen=True)
class CubicSpring:
    """Grounded cubic spring ``f_k = k_nl * q_k**3`` on a single coordinate.

    Parameters
    ----------
    coordinate : int
        1-based coordinate index the spring acts on.
    k_nl : float or "lambda"
        Cubic stiffness, or the string ``"lambda"`` to bind it to the
        continuation parameter.
    """

    coordinate: int
    k_nl: Bindable = 1.0
    kind = "cubic"

    def stiffness(self, lam: float) -> float:
        return _resolve(self.k_nl, lam)

    @property
    def is_bound(self) -> bool:
        return self.k_nl == LAMBDA

    def force(self, q: np.ndarray, qdot: np.ndarray, lam: float) -> np.ndarray:
        """Force for a single state or a stack of states (last axis = ndof)."""
        f = np.zeros_like(q, dtype=float)
        i = self.coordinate - 1
        f[..., i] = self.stiffness(lam) * q[..., i] ** 3
        return f

    def jacobian(
        self, q: np.ndarray, qdot: np.ndarray, lam: float
    ) -> tuple[np.ndarray, np.ndarray]:
        """Pointwise ``(df/dq, df/dqdot)``, shapes ``(..., ndof, ndof)``."""
        n = q.shape[-1]
        dfdq = np.zeros(q.shape + (n,))
        i = self.coordinate - 1
        dfdq[..., i, i] = 3.0 * self.stiffness(lam) * q[..., i] ** 2
        return dfdq, np.zeros_like(dfdq)


ELEMENT_KINDS = {"cubic": CubicSpring}

NonlinearElement = CubicSpring


@dataclass(frozen=True)
class HarmonicExcitation:
    """First-harmonic forcing ``F_c cos(wt) + F_s sin(wt)``.

    Entries may be floats or ``"lambda"``.
    """

    cosine: tuple[Bindable, ...]
    sine: tuple[Bindable, ...]

    @property
    def is_bound(self) -> bool:
        return any(v == LAMBDA for v in self.cosine + self.sine)

    def vectors(self, lam: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        fc = np.array([_resolve(v, lam) for v in self.cosine])
        fs = np.array([_resolve(v, lam) for v in self.sine])
        return fc, fs


@dataclass(frozen=True, eq=False)
class Model:
    """Structural model ``M q'' + C q' + K q + f_nl(q, q', lambda) = f_ex``.

    Matrices are stored as read-only arrays; the model is immutable after
    construction.
    """

    mass: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray
    excitation: HarmonicExcitation
    elements: tuple[NonlinearElement, ...] = field(default_factory=tuple)

    def __post_init__(self):
        M = _as_matrix(self.mass, "mass")
        C = _as_matrix(self.damping, "damping")
        K = _as_matrix(self.stiffness, "stiffness")
        n = M.shape[0]
        if C.shape != (n, n) or K.shape != (n, n):
            raise ModelError("mass, damping and stiffness must share one square shape")
        if not np.allclose(M, M.T) or not np.allclose(K, K.T):
            raise ModelError("mass and stiffness must be symmetric")
        try:
            np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            raise ModelError("mass matrix must be positive definite") from None
        if np.linalg.eigvalsh(K).min() < -1e-12 * max(1.0, np.abs(K).max()):
            raise ModelError("stiffness matrix must be positive semi-definite")
        if len(self.excitation.cosine) != n or len(self.excitation.sine) != n:
            raise ModelError(f"excitation vectors must have length {n}")
        for el in self.elements:
            if not 1 <= el.coordinate <= n:
                raise ModelError(f"element coordinate {el.coordinate} outside [1, {n}]")
        for name, arr in (("mass", M), ("damping", C), ("stiffness", K)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def ndof(self) -> int:
        return self.mass.shape[0]

    @property
    def is_linear(self) -> bool:
        return not self.elements

    @property
    def has_velocity_dependence(self) -> bool:
        # only displacement-dependent elements ship
        return False

    def nonlinear_force(self, q, qdot, lam):
        f = np.zeros(np.shape(q))
        for el in self.elements:
            f = f + el.force(q, qdot, lam)
        return f

    def nonlinear_jacobian(self, q, qdot, lam):
        n = self.ndof
        shape = np.shape(q) + (n,)
        dq, dv = np.zeros(shape), np.zeros(shape)
        for el in self.elements:
            a, b = el.jacobian(q, qdot, lam)
            dq += a
            dv += b
        return dq, dv

    def excitation_vectors(self, lam: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        return self.excitation.vectors(lam)

    def with_excitation(self, cosine, sine=None) -> "Model":
        """Copy of the model with a different first-harmonic forcing."""
        if sine is None:
            sine = [0.0] * self.ndof
        return Model(
            self.mass, self.damping, self.stiffness,
            HarmonicExcitation(tuple(cosine), tuple(sine)), self.elements,
        )


def _as_matrix(a, name) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ModelError(f"{name} must be a square matrix, got shape {arr.shape}")
    return arr


def build_proportional_damping(K, D1: float, omega1: float) -> np.ndarray:
    """Stiffness-proportional damping ``C = (2 D1 / omega1) K``.

    With this choice the mode at ``omega1`` has modal damping ratio ``D1``.
    """
    if omega1 <= 0:
        raise ValueError(f"omega1 must be positive, got {omega1}")
    return (2.0 * D1 / omega1) * np.asarray(K, dtype=float)


def natural_frequencies(M, K) -> np.ndarray:
    """Undamped natural frequencies, ascending.

    Raises
    ------
    numpy.linalg.LinAlgError
        If ``M`` is not positive definite.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    try:
        lam = scipy.linalg.eigh(K, M, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"generalized eigenproblem failed: {exc}") from exc
    return np.sqrt(np.clip(np.sort(lam), 0.0, None))


def eval_element_force(element, q, qdot, lam: float) -> np.ndarray:
    return element.force(np.asarray(q, dtype=float), np.asarray(qdot, dtype=float), lam)


def eval_element_jacobian(element, q, qdot, lam: float):
    return element.jacobian(np.asarray(q, dtype=float), np.asarray(qdot, dtype=float), lam)


# -- model files -----------------------------------------------------------

_TOP_KEYS = {"ndof", "mass", "stiffness", "damping", "elements", "excitation", "description"}


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ModelError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ModelError(f"{where}: unknown keys {sorted(unknown)}")


def _bindable(v, where: str) -> Bindable:
    if v == LAMBDA:
        return LAMBDA
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ModelError(f"{where}: expected a number or \"lambda\", got {v!r}")
    return float(v)


def model_from_dict(data: dict) -> Model:
    """Build a :class:`Model` from the JSON model-file schema (see README)."""
    _check_keys(data, _TOP_KEYS, "model")
    for key in ("ndof", "mass", "stiffness", "excitation"):
        if key not in data:
            raise ModelError(f"model: missing required key {key!r}")
    n = data["ndof"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ModelError("model: ndof must be a positive integer")
    M = _as_matrix(data["mass"], "mass")
    K = _as_matrix(data["stiffness"], "stiffness")
    if M.shape != (n, n):
        raise ModelError(f"mass: expected shape ({n}, {n}), got {M.shape}")

    damping = data.get("damping", None)
    if damping is None:
        C = np.zeros((n, n))
    elif isinstance(damping, dict):
        _check_keys(damping, {"proportional"}, "damping")
        prop = damping["proportional"]
        _check_keys(prop, {"D1", "mode"}, "damping.proportional")
        mode = prop.get("mode", 1)
        omegas = natural_frequencies(M, K)
        if not 1 <= mode <= n:
            raise ModelError(f"damping.proportional.mode must lie in [1, {n}]")
        C = build_proportional_damping(K, float(prop["D1"]), omegas[mode - 1])
    else:
        C = _as_matrix(damping, "damping")

    elements = []
    for i, el in enumerate(data.get("elements", [])):
        where = f"elements[{i}]"
        _check_keys(el, {"kind", "coordinate", "k_nl"}, where)
        kind = el.get("kind")
        if kind not in ELEMENT_KINDS:
            raise ModelError(f"{where}: unknown kind {kind!r}")
        coord = el.get("coordinate")
        if isinstance(coord, bool) or not isinstance(coord, int):
            raise ModelError(f"{where}: coordinate must be an integer")
        elements.append(CubicSpring(coord, _bindable(el.get("k_nl", 1.0), where + ".k_nl")))

    exc = data["excitation"]
    _check_keys(exc, {"cosine", "sine"}, "excitation")
    cos = exc.get("cosine", [0.0] * n)
    sin = exc.get("sine", [0.0] * n)
    cos = tuple(_bindable(v, "excitation.cosine") for v in cos)
    sin = tuple(_bindable(v, "excitation.sine") for v in sin)
    return Model(M, C, K, HarmonicExcitation(cos, sin), tuple(elements))


def load_model(path: Union[str, Path]) -> Model:
    """Read a JSON model file."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: invalid JSON ({exc})") from exc
    return model_from_dict(data)


def twodof_model(force_on: int = 1, cubic_on: int = 1, D1: float = 0.01,
                 f_ex: float = 2.0) -> Model:
    """The two-mass oscillator with a grounded cubic spring.

    Unit masses and springs, stiffness-proportional damping tuned to modal
    ratio ``D1`` in the first mode, forcing ``f_ex cos(wt)`` on mass
    ``force_on`` and a cubic spring with ``k_nl`` bound to the continuation
    parameter on coordinate ``cubic_on``.

    The default ``cubic_on=1`` is the placement whose resonance curves show
    the reference behaviour (error bounds for forcing on mass 1, the fold
    interval and detached branch for forcing on mass 2) when coordinate 2 is
    monitored. ``cubic_on=2`` is the mirror placement.
    """
    M = np.eye(2)
    K = np.array([[2.0, -1.0], [-1.0, 2.0]])
    C = build_proportional_damping(K, D1, natural_frequencies(M, K)[0])
    cos: list[Bindable] = [0.0, 0.0]
    cos[force_on - 1] = f_ex
    return Model(M, C, K, HarmonicExcitation(tuple(cos), (0.0, 0.0)),
                 (CubicSpring(cubic_on, LAMBDA),))


def sdof_model(m: float = 1.0, c: float = 0.02, k: float = 1.0, f: float = 1.0,
               k_nl: Bindable = 0.0) -> Model:
    """Single-DOF (optionally Duffing) oscillator forced by ``f cos(wt)``."""
    elements: Sequence[CubicSpring] = () if k_nl == 0.0 else (CubicSpring(1, k_nl),)
    return Model(np.array([[m]]), np.array([[c]]), np.array([[k]]),
                 HarmonicExcitation((f,), (0.0,)), tuple(elements))


BUNDLED_MODELS = ("twodof_m1", "twodof_m2", "linear_sdof")


def resolve_model(spec: Union[str, Path]) -> Model:
    """Load a model file, or a bundled model by name (``twodof_m1`` etc.)."""
    path = Path(spec)
    stem = path.name.removesuffix(".json")
    if not path.exists() and path.parent == Path(".") and stem in BUNDLED_MODELS:
        res = files(__package__).joinpath("models", stem + ".json")
        return model_from_dict(json.loads(res.read_text()))
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {spec}")
    return load_model(path)
