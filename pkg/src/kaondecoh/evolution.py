"""Time evolution of one- and two-kaon density matrices.

The master equation is

    d rho / dt = -i H rho + i rho H^dagger - D[rho],
    D[rho] = 1/2 sum_j (A_j^dag A_j rho + rho A_j^dag A_j - 2 A_j rho A_j^dag),

with ``A_j = sqrt(lambda) P_j`` and ``P_j`` the projectors onto the
Hamiltonian eigenstates. Units: times in tau_S, rates in Gamma_S.

Closed-form solutions are provided next to a fixed-step RK4 integrator that
knows nothing about them and serves as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .constants import DEFAULT_CONSTANTS
from .qmat import QUASISPIN, DensityMatrix, as_matrix, tensor

__all__ = [
    "KaonParams",
    "LindbladOperators",
    "effective_hamiltonian",
    "lindblad_operators",
    "singlet_state",
    "evolve_1p_analytic",
    "evolve_2p_analytic",
    "lindblad_rhs",
    "evolve_numeric",
    "evolve_numeric_path",
    "normalize",
    "E1",
    "E2",
]

DEFAULT_RK_STEP = 1e-3
FULLY_DECAYED = 1e-300

# |e1> = |K_S>|K_L>, |e2> = |K_L>|K_S> in the (SS, SL, LS, LL) ordering
E1 = np.array([0, 1, 0, 0], dtype=complex)
E2 = np.array([0, 0, 1, 0], dtype=complex)


@dataclass(frozen=True)
class KaonParams:
    """Kaon widths, mass difference and decoherence strength in Gamma_S units.

    ``lam`` is the decoherence parameter (often quoted as Lambda = lambda /
    Gamma_S). Defaults come from the packaged constants file.
    """

    gamma_S: float = 1.0
    gamma_L: float = DEFAULT_CONSTANTS.gamma_L
    delta_m: float = DEFAULT_CONSTANTS.delta_m
    lam: float = 0.0

    def __post_init__(self):
        if not self.gamma_S > 0:
            raise ValueError("gamma_S must be positive")
        if not self.gamma_L >= 0:
            raise ValueError("gamma_L must be non-negative")
        if not self.lam >= 0:
            raise ValueError("decoherence strength lam must be non-negative")

    @property
    def gamma(self) -> float:
        """Mean width (Gamma_S + Gamma_L) / 2."""
        return 0.5 * (self.gamma_S + self.gamma_L)

    @property
    def delta_gamma(self) -> float:
        """Width difference Gamma_L - Gamma_S."""
        return self.gamma_L - self.gamma_S

    def with_lambda(self, lam: float) -> KaonParams:
        return replace(self, lam=lam)

    @classmethod
    def from_constants(cls, constants, lam: float = 0.0) -> KaonParams:
        return cls(gamma_S=1.0, gamma_L=constants.gamma_L, delta_m=constants.delta_m, lam=lam)


@dataclass(frozen=True, eq=False)
class LindbladOperators:
    """Jump operators ``A_j = sqrt(lam) P_j`` built from orthogonal projectors."""

    projectors: tuple[np.ndarray, ...]
    lam: float

    @property
    def operators(self) -> tuple[np.ndarray, ...]:
        s = math.sqrt(self.lam)
        return tuple(s * p for p in self.projectors)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]


def effective_hamiltonian(p: KaonParams, particles: int = 1) -> np.ndarray:
    """Non-Hermitian effective mass Hamiltonian in the mass basis.

    The common mass m_S is dropped, leaving diag(-i Gamma_S/2, dm - i Gamma_L/2)
    for one kaon and ``H (x) 1 + 1 (x) H`` for the pair.
    """
    h1 = np.diag([-0.5j * p.gamma_S, p.delta_m - 0.5j * p.gamma_L])
    if particles == 1:
        return h1
    if particles == 2:
        eye = QUASISPIN.identity
        return tensor(h1, eye) + tensor(eye, h1)
    raise ValueError("particles must be 1 or 2")


def lindblad_operators(p: KaonParams, particles: int = 1) -> LindbladOperators:
    if particles == 1:
        projs = (np.array(QUASISPIN.up), np.array(QUASISPIN.down))
    elif particles == 2:
        projs = (np.outer(E1, E1.conj()), np.outer(E2, E2.conj()))
    else:
        raise ValueError("particles must be 1 or 2")
    return LindbladOperators(projectors=projs, lam=p.lam)


def singlet_state() -> DensityMatrix:
    """The pure quasispin singlet (|e1> - |e2>)/sqrt(2) as a density matrix."""
    psi = (E1 - E2) / math.sqrt(2.0)
    return DensityMatrix(np.outer(psi, psi.conj()), normalized=True)


def _check_time(t: float) -> float:
    t = float(t)
    if not t >= 0:
        raise ValueError(f"time must be non-negative, got {t!r}")
    return t


def evolve_1p_analytic(rho0, t: float, p: KaonParams) -> DensityMatrix:
    """Closed-form single-kaon evolution; populations decay, coherences dephase."""
    t = _check_time(t)
    r0 = as_matrix(rho0, dims=(2,))
    out = np.empty((2, 2), dtype=complex)
    out[0, 0] = r0[0, 0] * math.exp(-p.gamma_S * t)
    out[1, 1] = r0[1, 1] * math.exp(-p.gamma_L * t)
    out[1, 0] = r0[1, 0] * np.exp((-1j * p.delta_m - p.gamma - p.lam) * t)
    out[0, 1] = np.conj(out[1, 0])
    return DensityMatrix(out)


def evolve_2p_analytic(t: float, p: KaonParams) -> DensityMatrix:
    """Closed-form evolution of the singlet, unnormalized (trace exp(-2 Gamma t))."""
    t = _check_time(t)
    decay = 0.5 * math.exp(-2.0 * p.gamma * t)
    coh = math.exp(-p.lam * t)
    out = np.zeros((4, 4), dtype=complex)
    out[1, 1] = out[2, 2] = decay
    out[1, 2] = out[2, 1] = -decay * coh
    return DensityMatrix(out)


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, ops: LindbladOperators) -> np.ndarray:
    """Right-hand side of the master equation.

    Written as ``G rho + (G rho)^dag + sum_j A_j rho A_j^dag`` with
    ``G = -i H - 1/2 sum_j A_j^dag A_j`` so that a Hermitian ``rho`` gives an
    exactly Hermitian result in floating point.
    """
    g = -1j * H
    jumps = ops.operators
    for a in jumps:
        g = g - 0.5 * (a.conj().T @ a)
    x = g @ rho
    out = x + x.conj().T
    for a in jumps:
        y = a @ rho @ a.conj().T
        out += 0.5 * (y + y.conj().T)
    return out


def _rk4_step(rho, h, H, ops):
    k1 = lindblad_rhs(rho, H, ops)
    k2 = lindblad_rhs(rho + 0.5 * h * k1, H, ops)
    k3 = lindblad_rhs(rho + 0.5 * h * k2, H, ops)
    k4 = lindblad_rhs(rho + h * k3, H, ops)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_dims(rho0, H, ops) -> tuple[np.ndarray, np.ndarray]:
    r = as_matrix(rho0)
    h = as_matrix(H)
    if r.shape != h.shape or ops.dim != r.shape[0]:
        raise ValueError(
            f"inconsistent dimensions: rho {r.shape}, H {h.shape}, operators {ops.dim}"
        )
    return r, h


def evolve_numeric_path(
    rho0, H, ops: LindbladOperators, times: Sequence[float], step: float = DEFAULT_RK_STEP
) -> list[np.ndarray]:
    """Integrate the master equation with classical RK4 and sample at ``times``.

    ``times`` must be non-decreasing and start at or after 0 (the time of
    ``rho0``). Each interval is split into equal sub-steps no longer than
    ``step``. Returns raw arrays, one per requested time.
    """
    if not step > 0:
        raise ValueError("integration step must be positive")
    rho, h = _check_dims(rho0, H, ops)
    out = []
    now = 0.0
    for t in times:
        t = _check_time(t)
        if t < now:
            raise ValueError("sample times must be non-decreasing")
        span = t - now
        n = math.ceil(span / step - 1e-9) if span > 0 else 0
        if n:
            dt = span / n
            for _ in range(n):
                rho = _rk4_step(rho, dt, h, ops)
        now = t
        out.append(rho.copy())
    return out


def evolve_numeric(rho0, H, ops: LindbladOperators, t: float, step: float = DEFAULT_RK_STEP) -> DensityMatrix:
    """RK4 solution of the master equation at time ``t``."""
    (rho,) = evolve_numeric_path(rho0, H, ops, [t], step)
    return DensityMatrix(rho)


def normalize(rho) -> DensityMatrix:
    """Rescale to unit trace, compensating the decay of the kaons."""
    arr = as_matrix(rho)
    tr = float(np.trace(arr).real)
    if tr <= FULLY_DECAYED:
        raise ValueError("cannot normalize a fully decayed state")
    return DensityMatrix(arr / tr, normalized=True)
