"""Dense density-matrix algebra for one and two qubits.

Functions accept plain ``numpy`` arrays with optional leading batch axes:
a density matrix has shape ``(..., d, d)`` with ``d`` in ``{2, 4}`` and a set
of Kraus elements has shape ``(..., K, 2, 2)``. Qubit 0 is the most
significant factor of the tensor product.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-12
COLLAPSE_TOL = 1e-15

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class QuantumError(ValueError):
    """Base class for invalid quantum-core inputs."""


class ShapeError(QuantumError):
    pass


class ParameterError(QuantumError):
    pass


class InvalidCollapseError(QuantumError):
    pass


class NoiseKind(str, enum.Enum):
    BIT_FLIP = "bit_flip"
    AMPLITUDE_DAMPING = "amplitude_damping"
    DEPOLARIZING = "depolarizing"


class Basis(str, enum.Enum):
    COMPUTATIONAL = "computational"
    DIAGONAL = "diagonal"


KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)

# PROJECTORS[basis_index, outcome] ; basis 0 = computational, 1 = diagonal
PROJECTORS = np.array(
    [
        [np.outer(KET_0, KET_0.conj()), np.outer(KET_1, KET_1.conj())],
        [np.outer(KET_PLUS, KET_PLUS.conj()), np.outer(KET_MINUS, KET_MINUS.conj())],
    ]
)


def pure(ket) -> np.ndarray:
    """Density matrix ``|psi><psi|`` of a normalised ket."""
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def basis_index(basis) -> int:
    return 0 if Basis(basis) is Basis.COMPUTATIONAL else 1


# -- gates -------------------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    name: str
    matrix: np.ndarray = field(repr=False)

    @property
    def n_qubits(self) -> int:
        return 1 if self.matrix.shape[0] == 2 else 2


X = Gate("X", SIGMA_X)
H = Gate("H", HADAMARD)
I = Gate("I", I2)  # noqa: E741
CNOT = Gate("CNOT", CNOT_MATRIX)
GATES = {g.name: g for g in (X, H, I, CNOT)}


# -- channels ----------------------------------------------------------------


def kraus_elements(kind, p) -> np.ndarray:
    """Kraus elements for a noise kind at strength ``p``.

    ``p`` may be an array; the result then has shape ``p.shape + (K, 2, 2)``.

    Raises
    ------
    ParameterError
        If any strength lies outside ``[0, 1]``.
    """
    kind = NoiseKind(kind)
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ParameterError(f"noise strength must lie in [0, 1], got {p}")
    p = p[..., None, None]
    if kind is NoiseKind.BIT_FLIP:
        elems = [np.sqrt(1.0 - p) * I2, np.sqrt(p) * SIGMA_X]
    elif kind is NoiseKind.AMPLITUDE_DAMPING:
        e0 = np.zeros(p.shape[:-2] + (2, 2), dtype=complex)
        e1 = np.zeros_like(e0)
        e0[..., 0, 0] = 1.0
        e0[..., 1, 1] = np.sqrt(1.0 - p[..., 0, 0])
        e1[..., 0, 1] = np.sqrt(p[..., 0, 0])
        elems = [e0, e1]
    else:
        elems = [
            np.sqrt(1.0 - 0.75 * p) * I2,
            np.sqrt(p / 4.0) * SIGMA_X,
            np.sqrt(p / 4.0) * SIGMA_Y,
            np.sqrt(p / 4.0) * SIGMA_Z,
        ]
    return np.stack(np.broadcast_arrays(*elems), axis=-3)


@dataclass(frozen=True)
class KrausChannel:
    """A single-qubit noise channel at a fixed strength."""

    kind: NoiseKind
    strength: float
    elements: np.ndarray = field(repr=False)

    def completeness_error(self) -> float:
        total = np.einsum("kji,kjl->il", self.elements.conj(), self.elements)
        return float(np.max(np.abs(total - I2)))


def make_channel(kind, p: float) -> KrausChannel:
    """Build the channel of ``kind`` at strength ``p``."""
    kind = NoiseKind(kind)
    return KrausChannel(kind, float(p), kraus_elements(kind, float(p)))


def _n_qubits(rho: np.ndarray) -> int:
    if rho.ndim < 2 or rho.shape[-1] != rho.shape[-2] or rho.shape[-1] not in (2, 4):
        raise ShapeError(f"expected (..., 2, 2) or (..., 4, 4) density matrix, got {rho.shape}")
    return 1 if rho.shape[-1] == 2 else 2


def embed(op: np.ndarray, target: int, n_qubits: int) -> np.ndarray:
    """Lift single-qubit operators ``(..., 2, 2)`` onto ``target`` of ``n_qubits``."""
    op = np.asarray(op)
    if op.shape[-2:] != (2, 2):
        raise ShapeError(f"expected single-qubit operator, got {op.shape}")
    if not 0 <= target < n_qubits:
        raise ShapeError(f"target {target} out of range for {n_qubits} qubit(s)")
    if n_qubits == 1:
        return op
    if target == 0:
        out = np.einsum("...ab,cd->...acbd", op, I2)
    else:
        out = np.einsum("ab,...cd->...acbd", I2, op)
    return out.reshape(op.shape[:-2] + (4, 4))


def apply_kraus(rho, elements, target: int = 0) -> np.ndarray:
    """Operator-sum map ``sum_k E_k rho E_k^dagger`` on one qubit of ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    n = _n_qubits(rho)
    ops = embed(elements, target, n)
    left = ops @ rho[..., None, :, :]
    return np.sum(left @ np.swapaxes(ops.conj(), -1, -2), axis=-3)


def apply_channel(rho, channel: KrausChannel, target: int = 0) -> np.ndarray:
    return apply_kraus(rho, channel.elements, target)


def apply_unitary(rho, unitary, targets=(0,)) -> np.ndarray:
    """Conjugate ``rho`` by ``unitary`` acting on ``targets``.

    Single-qubit unitaries may carry batch axes; two-qubit unitaries act on
    the full register and ``targets`` must be ``(0, 1)``.
    """
    rho = np.asarray(rho, dtype=complex)
    unitary = np.asarray(unitary, dtype=complex)
    n = _n_qubits(rho)
    targets = tuple(targets)
    if unitary.shape[-1] == 4:
        if n != 2 or targets != (0, 1):
            raise ShapeError("two-qubit gate needs a two-qubit state and targets (0, 1)")
        u = unitary
    else:
        if len(targets) != 1:
            raise ShapeError("single-qubit gate takes exactly one target")
        u = embed(unitary, targets[0], n)
    return u @ rho @ np.swapaxes(u.conj(), -1, -2)


def apply_gate(rho, gate: Gate, targets=(0,)) -> np.ndarray:
    return apply_unitary(rho, gate.matrix, targets)


# -- measurement -------------------------------------------------------------


def _projectors(basis, outcome, target, n):
    """Projector(s) onto ``outcome`` in ``basis``; both may be arrays."""
    if isinstance(basis, str):
        b = basis_index(basis)
    else:
        b = np.asarray(basis, dtype=int)
    proj = PROJECTORS[b, np.asarray(outcome, dtype=int)]
    return embed(proj, target, n)


def measure_probs(rho, basis, target: int = 0):
    """Outcome probabilities ``(p0, p1)`` for measuring ``target`` in ``basis``.

    ``basis`` is a :class:`Basis` value or an integer array (0 computational,
    1 diagonal) broadcastable against the batch axes of ``rho``.
    """
    rho = np.asarray(rho, dtype=complex)
    n = _n_qubits(rho)
    proj0 = _projectors(basis, 0, target, n)
    p0 = np.real(np.einsum("...ij,...ji->...", proj0, rho))
    trace = np.real(np.trace(rho, axis1=-2, axis2=-1))
    p0 = np.clip(p0, 0.0, trace)
    p1 = trace - p0
    if np.ndim(p0) == 0:
        return float(p0), float(p1)
    return p0, p1


def collapse(rho, basis, target: int, outcome, check: bool = True) -> np.ndarray:
    """Post-measurement state ``P rho P / Tr(P rho)``.

    Raises
    ------
    InvalidCollapseError
        If the requested outcome has (numerically) zero probability and
        ``check`` is true.
    """
    rho = np.asarray(rho, dtype=complex)
    n = _n_qubits(rho)
    proj = _projectors(basis, outcome, target, n)
    post = proj @ rho @ proj
    prob = np.real(np.trace(post, axis1=-2, axis2=-1))
    if check and np.any(prob <= COLLAPSE_TOL):
        raise InvalidCollapseError("cannot collapse onto a zero-probability outcome")
    return post / prob[..., None, None]


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class DensityMatrix:
    """Validated single density matrix (2x2 or 4x4)."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise ShapeError(f"density matrix must be 2x2 or 4x4, got {m.shape}")
        problems = validity_errors(m)
        if problems:
            raise QuantumError("invalid density matrix: " + "; ".join(problems))
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_qubits(self) -> int:
        return 1 if self.dim == 2 else 2

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        return cls(pure(ket))


def validity_errors(rho, herm_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL, psd_tol=PSD_TOL):
    """List the density-matrix invariants ``rho`` violates (empty if valid)."""
    rho = np.asarray(rho, dtype=complex)
    errs = []
    herm = np.max(np.abs(rho - np.swapaxes(rho.conj(), -1, -2)))
    if herm > herm_tol:
        errs.append(f"not Hermitian (max deviation {herm:.3g})")
    tr = np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0))
    if tr > trace_tol:
        errs.append(f"trace deviates from 1 by {tr:.3g}")
    hermitised = 0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))
    low = np.min(np.linalg.eigvalsh(hermitised))
    if low < -psd_tol:
        errs.append(f"negative eigenvalue {low:.3g}")
    return errs


BELL_PHI_PLUS = pure(np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))
