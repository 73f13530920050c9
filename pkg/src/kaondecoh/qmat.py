"""Dense complex matrices on C^2 and C^2 (x) C^2.

Basis conventions used throughout the package:

* one particle: index 0 = K_S (quasispin up), index 1 = K_L (quasispin down);
* two particles: product basis ordered (SS, SL, LS, LL), the left-moving
  particle being the left Kronecker factor. The two-particle Hamiltonian
  eigenstates |e1> = |K_S>|K_L> and |e2> = |K_L>|K_S> sit at indices 1 and 2.

Matrices are plain ``numpy`` arrays. :class:`DensityMatrix` wraps one with
the Hermiticity / positivity checks expected of a physical state.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = -1e-10

__all__ = [
    "HERMITIAN_TOL",
    "POSITIVITY_TOL",
    "Side",
    "DensityMatrix",
    "QuasispinBasis",
    "QUASISPIN",
    "as_matrix",
    "adjoint",
    "is_hermitian",
    "tensor",
    "partial_trace",
    "partial_transpose",
    "herm_eigvals",
]


class Side(str, Enum):
    """Which particle of the pair an operation acts on."""

    LEFT = "left"
    RIGHT = "right"


def as_matrix(m, dims=(2, 4)) -> np.ndarray:
    """Return ``m`` as a complex square array, checking its dimension."""
    if isinstance(m, DensityMatrix):
        m = m.mat
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] not in dims:
        raise ValueError(f"matrix dimension must be one of {dims}, got {arr.shape[0]}")
    return arr


def adjoint(m) -> np.ndarray:
    return as_matrix(m).conj().T


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    arr = as_matrix(m)
    return bool(np.max(np.abs(arr - arr.conj().T)) <= tol)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A (possibly unnormalized, decaying) density matrix of dimension 2 or 4.

    The trace is allowed to fall below one: the effective kaon Hamiltonian is
    non-Hermitian, so ``Tr rho(t)`` tracks the survival probability. Use
    :func:`kaondecoh.evolution.normalize` to obtain the trace-one state.

    Parameters
    ----------
    mat : array_like
        Square complex matrix, 2x2 or 4x4.
    normalized : bool
        Set once the trace has been rescaled to one; checked on construction.
    """

    mat: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = as_matrix(self.mat).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)
        if not is_hermitian(arr):
            dev = np.max(np.abs(arr - arr.conj().T))
            raise ValueError(f"density matrix is not Hermitian (max deviation {dev:.3g})")
        tr = float(np.trace(arr).real)
        if not 0.0 < tr <= 1.0 + HERMITIAN_TOL:
            raise ValueError(f"density matrix trace must lie in (0, 1], got {tr!r}")
        if self.normalized and abs(tr - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"normalized flag set but trace is {tr!r}")
        lo = np.linalg.eigvalsh(arr)[0]
        if lo < POSITIVITY_TOL:
            raise ValueError(f"density matrix is not positive semidefinite (eigenvalue {lo:.3g})")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def purity(self) -> float:
        """``Tr(rho^2)`` of the trace-normalized state."""
        r = self.mat / self.trace
        return float(np.trace(r @ r).real)

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


@dataclass(frozen=True)
class QuasispinBasis:
    """Constant 2x2 operators of the quasispin picture.

    ``up``/``down`` project onto K_S/K_L, ``plus``/``minus`` are the ladder
    operators |K_S><K_L| and |K_L><K_S|.
    """

    up: np.ndarray
    down: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    identity: np.ndarray


def _frozen(rows) -> np.ndarray:
    a = np.array(rows, dtype=complex)
    a.setflags(write=False)
    return a


QUASISPIN = QuasispinBasis(
    up=_frozen([[1, 0], [0, 0]]),
    down=_frozen([[0, 0], [0, 1]]),
    plus=_frozen([[0, 1], [0, 0]]),
    minus=_frozen([[0, 0], [1, 0]]),
    sx=_frozen([[0, 1], [1, 0]]),
    sy=_frozen([[0, -1j], [1j, 0]]),
    sz=_frozen([[1, 0], [0, -1]]),
    identity=_frozen(np.eye(2)),
)


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two 2x2 operators, ``a`` acting on the left particle."""
    a = as_matrix(a, dims=(2,))
    b = as_matrix(b, dims=(2,))
    return np.kron(a, b)


def _split(rho) -> np.ndarray:
    # (i, k, j, l) with row = 2i + k, col = 2j + l
    return as_matrix(rho, dims=(4,)).reshape(2, 2, 2, 2)


def partial_trace(rho, side: Side | str) -> DensityMatrix | np.ndarray:
    """Trace out the particle on ``side`` of a 4x4 operator.

    ``partial_trace(rho, "right")`` returns the reduced state of the left
    particle. A :class:`DensityMatrix` input yields a :class:`DensityMatrix`
    carrying the same ``normalized`` flag; a bare array yields an array.
    """
    side = Side(side)
    t = _split(rho)
    if side is Side.RIGHT:
        red = np.einsum("ikjk->ij", t)
    else:
        red = np.einsum("kikj->ij", t)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(red, normalized=rho.normalized)
    return red


def partial_transpose(rho, side: Side | str) -> np.ndarray:
    """Transpose only the factor on ``side``; the result need not be positive."""
    side = Side(side)
    t = _split(rho)
    if side is Side.RIGHT:
        out = t.transpose(0, 3, 2, 1)
    else:
        out = t.transpose(2, 1, 0, 3)
    return out.reshape(4, 4).copy()


def herm_eigvals(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, in decreasing order."""
    arr = as_matrix(m)
    if not is_hermitian(arr, tol):
        raise ValueError("herm_eigvals requires a Hermitian matrix")
    return np.linalg.eigvalsh(arr)[::-1]
