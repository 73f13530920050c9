"""Entanglement measures for two-kaon states.

All entropies are in bits. Inputs are trace-normalized 4x4 density matrices
in the (SS, SL, LS, LL) product basis.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from .evolution import KaonParams, evolve_2p_analytic, normalize
from .observables import ZetaKind, ZetaModel, zeta_eval
from .qmat import HERMITIAN_TOL, POSITIVITY_TOL, QUASISPIN, DensityMatrix, herm_eigvals, partial_trace, partial_transpose

__all__ = [
    "BELL_STATES",
    "BellDecomposition",
    "EntanglementReport",
    "binary_entropy",
    "vn_entropy",
    "reduced_entropies",
    "bell_decompose",
    "ppt_test",
    "reduction_test",
    "spin_flip",
    "concurrence_roots",
    "concurrence",
    "fully_entangled_fraction",
    "eof",
    "eof_from_concurrence",
    "eof_from_fraction",
    "entanglement_report",
    "sweep_report",
]

BELL_DIAGONAL_TOL = 1e-10

_S2 = 1.0 / math.sqrt(2.0)
# psi-/psi+ live on span{|SL>, |LS>} = span{|e1>, |e2>}, phi-/phi+ on span{|SS>, |LL>}
BELL_STATES = {
    "psi_minus": np.array([0, _S2, -_S2, 0], dtype=complex),
    "psi_plus": np.array([0, _S2, _S2, 0], dtype=complex),
    "phi_minus": np.array([_S2, 0, 0, -_S2], dtype=complex),
    "phi_plus": np.array([_S2, 0, 0, _S2], dtype=complex),
}
_BELL_MATRIX = np.column_stack(list(BELL_STATES.values()))
_YY = np.kron(QUASISPIN.sy, QUASISPIN.sy)


def _normalized(rho, dims=(4,)) -> DensityMatrix:
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    if rho.dim not in dims:
        raise ValueError(f"expected dimension in {dims}, got {rho.dim}")
    if abs(rho.trace - 1.0) > HERMITIAN_TOL:
        raise ValueError("state must be normalized (unit trace)")
    return rho


def binary_entropy(x: float) -> float:
    """H(x) = -x log2 x - (1-x) log2 (1-x) with 0 log 0 = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("binary entropy argument must lie in [0, 1]")
    return -sum(v * math.log2(v) for v in (x, 1.0 - x) if v > 0.0)


def vn_entropy(rho) -> float:
    """Von Neumann entropy -Tr(rho log2 rho) of a normalized state."""
    rho = _normalized(rho, dims=(2, 4))
    ev = herm_eigvals(rho.mat)
    ev = ev[ev > 0.0]
    return float(max(0.0, -np.sum(ev * np.log2(ev))))


def reduced_entropies(rho) -> tuple[float, float]:
    """Entropies of the left and right single-kaon reduced states."""
    rho = _normalized(rho)
    return vn_entropy(partial_trace(rho, "right")), vn_entropy(partial_trace(rho, "left"))


@dataclass(frozen=True)
class BellDecomposition:
    w_minus: float
    w_plus: float
    w_phi_minus: float
    w_phi_plus: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w_minus, self.w_plus, self.w_phi_minus, self.w_phi_plus)


def _bell_frame(rho: np.ndarray) -> np.ndarray:
    return _BELL_MATRIX.conj().T @ rho @ _BELL_MATRIX


def bell_decompose(rho) -> BellDecomposition:
    """Populations of the four Bell states, psi- first."""
    rho = _normalized(rho)
    w = np.diag(_bell_frame(rho.mat)).real
    return BellDecomposition(*map(float, w))


def ppt_test(rho, tol: float = -POSITIVITY_TOL) -> tuple[bool, float]:
    """Peres-Horodecki test on the right factor.

    Returns ``(separable_candidate, min_eigenvalue)``. For two qubits a
    negative eigenvalue of the partial transpose certifies entanglement and
    a non-negative spectrum certifies separability.
    """
    rho = _normalized(rho)
    lo = float(herm_eigvals(partial_transpose(rho, "right"))[-1])
    return lo >= -tol, lo


def reduction_test(rho, tol: float = -POSITIVITY_TOL) -> tuple[bool, float]:
    """Reduction criterion: rho_l (x) 1 - rho and 1 (x) rho_r - rho must both be >= 0.

    The returned eigenvalue is the minimum over both operators.
    """
    rho = _normalized(rho)
    eye = np.eye(2)
    left = np.kron(partial_trace(rho.mat, "right"), eye) - rho.mat
    right = np.kron(eye, partial_trace(rho.mat, "left")) - rho.mat
    lo = float(min(herm_eigvals(left)[-1], herm_eigvals(right)[-1]))
    return lo >= -tol, lo


def spin_flip(rho) -> np.ndarray:
    """(sigma_y (x) sigma_y) rho* (sigma_y (x) sigma_y), conjugation in the product basis."""
    if isinstance(rho, DensityMatrix):
        rho = rho.mat
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("spin flip is defined for 4x4 two-qubit operators")
    return _YY @ rho.conj() @ _YY


def concurrence_roots(rho) -> np.ndarray:
    """Square roots of the eigenvalues of rho @ spin_flip(rho), decreasing.

    Computed as singular values of tau = W^T (sy (x) sy) W with
    W = V diag(sqrt(p)) from the spectral decomposition of rho. This yields
    the roots directly instead of their squares, so small roots keep full
    absolute precision. Eigenvalues of rho below ``16 eps`` are treated as
    round-off and dropped.
    """
    rho = _normalized(rho)
    p, v = np.linalg.eigh(rho.mat)
    p = np.where(p < 16.0 * np.finfo(float).eps, 0.0, p)
    w = v * np.sqrt(p)
    tau = w.T @ _YY @ w
    return np.linalg.svd(tau, compute_uv=False)


def concurrence(rho) -> float:
    """Wootters concurrence max(0, l1 - l2 - l3 - l4)."""
    r = concurrence_roots(rho)
    return float(max(0.0, r[0] - r[1] - r[2] - r[3]))


def fully_entangled_fraction(rho, tol: float = BELL_DIAGONAL_TOL) -> float:
    """Largest overlap with a maximally entangled state, for Bell-diagonal input.

    For a Bell-diagonal state this is the largest Bell weight. Other states
    would need an optimization over all maximally entangled vectors and are
    rejected.
    """
    rho = _normalized(rho)
    b = _bell_frame(rho.mat)
    off = b - np.diag(np.diag(b))
    if np.max(np.abs(off)) > tol:
        raise ValueError("fraction defined only for Bell-diagonal states in this artifact")
    return float(np.max(np.diag(b).real))


def eof_from_concurrence(c: float) -> float:
    """Entanglement of formation of a two-qubit state with concurrence ``c``."""
    if not 0.0 <= c <= 1.0 + 1e-12:
        raise ValueError("concurrence must lie in [0, 1]")
    c = min(c, 1.0)
    return binary_entropy(0.5 + 0.5 * math.sqrt(1.0 - c * c))


def eof_from_fraction(f: float) -> float:
    """Bennett et al. bound as a function of the fully entangled fraction.

    Exact for Bell-diagonal states; zero below f = 1/2.
    """
    if f < 0.5:
        return 0.0
    return binary_entropy(0.5 + math.sqrt(max(0.0, f * (1.0 - f))))


def eof(rho) -> float:
    """Entanglement of formation via the concurrence."""
    return eof_from_concurrence(concurrence(rho))


@dataclass(frozen=True)
class EntanglementReport:
    t: float
    entropy: float
    reduced_entropy_left: float
    reduced_entropy_right: float
    bell: BellDecomposition
    ppt_min_eigval: float
    reduction_min_eigval: float
    concurrence: float
    fraction: float
    eof: float
    zeta: float
    loss_C: float
    loss_E: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bell"] = asdict(self.bell)
        return d


def entanglement_report(t: float, p: KaonParams) -> EntanglementReport:
    """All entanglement quantities of the normalized singlet evolved to ``t``."""
    rho = normalize(evolve_2p_analytic(t, p))
    s_l, s_r = reduced_entropies(rho)
    c = concurrence(rho)
    e = eof_from_concurrence(c)
    return EntanglementReport(
        t=float(t),
        entropy=vn_entropy(rho),
        reduced_entropy_left=s_l,
        reduced_entropy_right=s_r,
        bell=bell_decompose(rho),
        ppt_min_eigval=ppt_test(rho)[1],
        reduction_min_eigval=reduction_test(rho)[1],
        concurrence=c,
        fraction=fully_entangled_fraction(rho),
        eof=e,
        zeta=float(zeta_eval(ZetaModel(ZetaKind.SINGLE_TIME, lam=p.lam), t, t)),
        loss_C=1.0 - c,
        loss_E=1.0 - e,
    )


def sweep_report(t_grid: Iterable[float], p: KaonParams) -> list[EntanglementReport]:
    """One report per time; the grid must be sorted and non-negative."""
    ts = [float(t) for t in t_grid]
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise ValueError("time grid must be sorted")
    return [entanglement_report(t, p) for t in ts]
