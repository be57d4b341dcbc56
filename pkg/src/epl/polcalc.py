"""Finite-dimensional polarization / path calculus.

States live on tensor products of two-level modes (polarization or a
two-valued path).  Ordering of modes is always the order in which they were
composed with :func:`tensor`; basis index 0 is ``H`` (or path ``0``) and
index 1 is ``V`` (or path ``1``).

Angle conventions
-----------------
``bloch``
    The analyzer parameter ``theta`` of ``cos(theta/2)|H> + sin(theta/2)|V>``.
    This is the internal convention everywhere.
``hwp``
    Physical half-wave-plate angle in front of a polarizer transmitting H.
    ``theta = 4 * hwp``.
``polarizer``
    Orientation of the selected linear polarization. ``theta = 2 * polarizer``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

ATOL = 1e-12
EIG_ATOL = 1e-10

SQRT2 = np.sqrt(2.0)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

ANGLE_CONVENTIONS = ("bloch", "hwp", "polarizer")
_TO_BLOCH = {"bloch": 1.0, "hwp": 4.0, "polarizer": 2.0}


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PolState:
    """Pure state vector or density matrix over ``dims`` two-level modes."""

    dims: tuple[int, ...]
    data: np.ndarray
    kind: Literal["pure", "mixed"]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if any(d != 2 for d in dims) or not 1 <= len(dims) <= 3:
            raise DimensionError(f"modes must be 1-3 qubit-like modes, got dims={dims}")
        n = int(np.prod(dims))
        data = np.array(self.data, dtype=complex)
        if self.kind == "pure":
            data = data.reshape(-1)
            if data.shape != (n,):
                raise DimensionError(f"expected vector of length {n}, got {data.shape}")
            norm = np.vdot(data, data).real
            if abs(norm - 1.0) > ATOL:
                raise ValueError(f"pure state not normalized (|psi|^2 = {norm!r})")
        elif self.kind == "mixed":
            if data.shape != (n, n):
                raise DimensionError(f"expected {n}x{n} matrix, got {data.shape}")
            if np.abs(data - data.conj().T).max() > ATOL:
                raise ValueError("density matrix is not Hermitian")
            tr = np.trace(data).real
            if abs(tr - 1.0) > ATOL:
                raise ValueError(f"density matrix trace {tr!r} != 1")
            lam_min = np.linalg.eigvalsh(data).min()
            if lam_min < -EIG_ATOL:
                raise ValueError(f"density matrix has negative eigenvalue {lam_min:.3e}")
        else:
            raise ValueError(f"unknown state kind {self.kind!r}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def pure(cls, vec, dims: Sequence[int] | None = None) -> "PolState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if dims is None:
            dims = (2,) * int(round(np.log2(vec.size)))
        return cls(tuple(dims), vec, "pure")

    @classmethod
    def mixed(cls, rho, dims: Sequence[int] | None = None) -> "PolState":
        rho = np.asarray(rho, dtype=complex)
        if dims is None:
            dims = (2,) * int(round(np.log2(rho.shape[0])))
        return cls(tuple(dims), rho, "mixed")

    @classmethod
    def normalized(cls, vec, dims: Sequence[int] | None = None) -> "PolState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        return cls.pure(vec / np.linalg.norm(vec), dims)

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def dm(self) -> np.ndarray:
        """Density matrix (a fresh, writable array)."""
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data.copy()

    def as_mixed(self) -> "PolState":
        return self if not self.is_pure else PolState(self.dims, self.dm(), "mixed")

    def __repr__(self):
        return f"PolState(kind={self.kind!r}, dims={self.dims})"


@dataclass(frozen=True)
class AnalyzerSetting:
    """Pair of Bloch-plane analyzer angles (degrees), reduced to [0, 360)."""

    theta_s: float
    theta_i: float
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for name in ("theta_s", "theta_i"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, canonical_angle(val))

    @classmethod
    def from_convention(cls, theta_s, theta_i, convention="bloch", label=""):
        return cls(to_bloch(theta_s, convention), to_bloch(theta_i, convention), label)

    def states(self) -> tuple[np.ndarray, np.ndarray]:
        return analyzer_state(self.theta_s).data, analyzer_state(self.theta_i).data


def canonical_angle(theta: float) -> float:
    out = float(np.mod(theta, 360.0))
    # np.mod can return 360.0 for tiny negative inputs
    return 0.0 if out >= 360.0 else out


def to_bloch(angle, convention: str = "bloch"):
    """Convert an analyzer angle (degrees) in ``convention`` to the Bloch parameter."""
    try:
        return np.multiply(angle, _TO_BLOCH[convention])
    except KeyError:
        raise ValueError(f"unknown angle convention {convention!r}") from None


def from_bloch(theta, convention: str = "bloch"):
    try:
        return np.divide(theta, _TO_BLOCH[convention])
    except KeyError:
        raise ValueError(f"unknown angle convention {convention!r}") from None


def hwp_angle(theta_deg):
    """Physical HWP angle that makes a H-transmitting analyzer project on ``analyzer_state(theta)``."""
    return from_bloch(theta_deg, "hwp")


# -- operators ---------------------------------------------------------------

def rotation(angle_deg: float) -> np.ndarray:
    a = np.deg2rad(angle_deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s], [s, c]], dtype=complex)


def hwp(angle_deg: float) -> np.ndarray:
    """Half-wave plate Jones matrix with its fast axis at ``angle_deg`` from H."""
    h2 = 2.0 * np.deg2rad(angle_deg)
    c, s = np.cos(h2), np.sin(h2)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp(angle_deg: float) -> np.ndarray:
    """Quarter-wave plate Jones matrix; ``qwp(h) @ qwp(h)`` equals ``hwp(h)`` up to phase."""
    return rotation(angle_deg) @ np.diag([1.0, -1j]) @ rotation(-angle_deg)


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0
    )


# -- named states ------------------------------------------------------------

_S = 1.0 / SQRT2
BASIS_VECTORS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "A": np.array([_S, -_S], dtype=complex),
    "R": np.array([_S, 1j * _S], dtype=complex),
    "L": np.array([_S, -1j * _S], dtype=complex),
}

BELL_LABELS = ("Phi+", "Phi-", "Psi+", "Psi-")
_BELL_ALIASES = {
    "Φ+": "Phi+", "Φ-": "Phi-", "Φ−": "Phi-",
    "Ψ+": "Psi+", "Ψ-": "Psi-", "Ψ−": "Psi-",
}


def basis_state(label: str) -> PolState:
    try:
        return PolState.pure(BASIS_VECTORS[label], (2,))
    except KeyError:
        raise ValueError(f"unknown polarization label {label!r}") from None


def analyzer_state(theta_deg: float) -> PolState:
    """``cos(theta/2)|H> + sin(theta/2)|V>`` for the Bloch-plane angle ``theta``."""
    half = 0.5 * np.deg2rad(theta_deg)
    return PolState.pure([np.cos(half), np.sin(half)], (2,))


def canonical_bell_label(label: str) -> str:
    label = _BELL_ALIASES.get(label, label)
    if label not in BELL_LABELS:
        raise ValueError(f"unknown Bell label {label!r}; expected one of {BELL_LABELS}")
    return label


def bell(label: str) -> PolState:
    label = canonical_bell_label(label)
    v = np.zeros(4, dtype=complex)
    if label.startswith("Phi"):
        v[0], v[3] = 1, (1 if label.endswith("+") else -1)
    else:
        v[1], v[2] = 1, (1 if label.endswith("+") else -1)
    return PolState.pure(v / SQRT2, (2, 2))


def werner(p: float) -> PolState:
    """``p |Phi+><Phi+| + (1 - p) I/4``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Werner weight must lie in [0, 1], got {p}")
    return PolState.mixed(p * bell("Phi+").dm() + (1 - p) * np.eye(4) / 4, (2, 2))


def maximally_mixed(n_modes: int = 2) -> PolState:
    d = 2**n_modes
    return PolState.mixed(np.eye(d) / d, (2,) * n_modes)


# -- composition -------------------------------------------------------------

def tensor(a, b):
    """Tensor product of two states, or of two operators."""
    if isinstance(a, PolState) and isinstance(b, PolState):
        dims = a.dims + b.dims
        if a.is_pure and b.is_pure:
            return PolState(dims, np.kron(a.data, b.data), "pure")
        return PolState(dims, np.kron(a.dm(), b.dm()), "mixed")
    if isinstance(a, PolState) or isinstance(b, PolState):
        raise TypeError("cannot tensor a state with an operator")
    return np.kron(np.asarray(a), np.asarray(b))


def apply(u: np.ndarray, s: PolState) -> PolState:
    u = np.asarray(u, dtype=complex)
    if u.shape != (s.dim, s.dim):
        raise DimensionError(f"operator of shape {u.shape} does not act on {s.dims}")
    if s.is_pure:
        out = u @ s.data
        return PolState(s.dims, out / np.linalg.norm(out), "pure")
    rho = u @ s.data @ u.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return PolState(s.dims, rho / np.trace(rho).real, "mixed")


def partial_trace_matrix(m: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of an arbitrary operator ``m`` on modes ``dims``."""
    dims = tuple(dims)
    keep = sorted(int(k) for k in keep)
    n = len(dims)
    if not keep or any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise DimensionError(f"invalid modes to keep {keep} for {n} modes")
    t = np.asarray(m).reshape(dims + dims)
    letters = "abcdefgh"
    row = "".join(letters[:n])
    col = "".join(letters[k].upper() if k in keep else letters[k] for k in range(n))
    out = "".join(letters[k] for k in keep) + "".join(letters[k].upper() for k in keep)
    d = int(np.prod([dims[k] for k in keep]))
    return np.einsum(f"{row}{col}->{out}", t).reshape(d, d)


def partial_trace(rho: PolState, keep: Sequence[int]) -> PolState:
    reduced = partial_trace_matrix(rho.dm(), rho.dims, keep)
    reduced = 0.5 * (reduced + reduced.conj().T)
    return PolState(tuple(rho.dims[k] for k in sorted(keep)), reduced, "mixed")


def fidelity(rho: PolState, psi: PolState) -> float:
    """``<psi| rho |psi>`` for a pure reference ``psi``."""
    if not psi.is_pure:
        raise TypeError("reference state must be pure")
    if rho.dim != psi.dim:
        raise DimensionError(f"dimension mismatch: {rho.dims} vs {psi.dims}")
    if rho.is_pure:
        f = abs(np.vdot(psi.data, rho.data)) ** 2
    else:
        f = np.vdot(psi.data, rho.data @ psi.data).real
    if -EIG_ATOL < f < 0.0:
        f = 0.0
    elif 1.0 < f < 1.0 + EIG_ATOL:
        f = 1.0
    return float(f)


def fidelity_trace(rho: PolState, psi: PolState) -> float:
    """``Tr(rho |psi><psi|)``; an independent route to :func:`fidelity`."""
    if rho.dim != psi.dim:
        raise DimensionError(f"dimension mismatch: {rho.dims} vs {psi.dims}")
    return float(np.trace(rho.dm() @ psi.dm()).real)


def overlap(a: PolState, b: PolState) -> float:
    """Phase-insensitive overlap ``|<a|b>|`` of two pure states."""
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dims} vs {b.dims}")
    return float(abs(np.vdot(a.data, b.data)))


def purity(rho: PolState) -> float:
    m = rho.dm()
    return float(np.trace(m @ m).real)


def trace_distance(a, b) -> float:
    a = a.dm() if isinstance(a, PolState) else np.asarray(a)
    b = b.dm() if isinstance(b, PolState) else np.asarray(b)
    return float(0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum())


def projector(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(vec, vec.conj())
