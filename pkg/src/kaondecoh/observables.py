"""Strangeness coincidence probabilities and asymmetries for kaon pairs.

Strangeness states in the mass basis (CP conserved):
|K0> = (|K_S> + |K_L>)/sqrt(2), |K0bar> = (|K_S> - |K_L>)/sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .evolution import KaonParams, evolve_1p_analytic, evolve_2p_analytic
from .qmat import DensityMatrix, partial_trace, tensor

__all__ = [
    "Strangeness",
    "TwoTimeOutcome",
    "ZetaKind",
    "ZetaModel",
    "strangeness_projector",
    "prob_lambda",
    "prob_lambda_sequential",
    "prob_zeta",
    "asymmetry_qm",
    "asymmetry_lambda",
    "asymmetry_zeta",
    "asymmetry_from_probs",
    "zeta_eval",
]


class Strangeness(Enum):
    PLUS = +1  # K0
    MINUS = -1  # K0bar


def strangeness_projector(s: Strangeness) -> np.ndarray:
    v = np.array([1.0, float(s.value)], dtype=complex) / math.sqrt(2.0)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class TwoTimeOutcome:
    """Strangeness ``s_left`` found at ``t_l`` and ``s_right`` at ``t_r``."""

    s_left: Strangeness
    s_right: Strangeness
    t_l: float
    t_r: float

    def __post_init__(self):
        if not (self.t_l >= 0 and self.t_r >= 0):
            raise ValueError("measurement times must be non-negative")

    @property
    def dt(self) -> float:
        return self.t_l - self.t_r

    @property
    def like(self) -> bool:
        return self.s_left is self.s_right

    def swapped(self) -> TwoTimeOutcome:
        return TwoTimeOutcome(self.s_right, self.s_left, self.t_r, self.t_l)


class ZetaKind(str, Enum):
    TWO_PARTICLE_MIN = "min"
    SINGLE_TIME = "single"
    ONE_PARTICLE_SUM = "sum"
    CONSTANT = "const"


@dataclass(frozen=True)
class ZetaModel:
    """How the effective decoherence parameter zeta depends on the times.

    ``lam`` drives the time-dependent kinds; ``zeta`` is the fixed value for
    :attr:`ZetaKind.CONSTANT`.
    """

    kind: ZetaKind = ZetaKind.TWO_PARTICLE_MIN
    lam: float = 0.0
    zeta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ZetaKind(self.kind))
        if not self.lam >= 0:
            raise ValueError("lam must be non-negative")
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError("constant zeta must lie in [0, 1]")

    def with_parameter(self, value: float) -> ZetaModel:
        """Copy with the free parameter (lam, or zeta for CONSTANT) replaced."""
        if self.kind is ZetaKind.CONSTANT:
            return ZetaModel(self.kind, self.lam, value)
        return ZetaModel(self.kind, value, self.zeta)


def _check_times(t_l, t_r):
    if np.any(np.asarray(t_l) < 0) or np.any(np.asarray(t_r) < 0):
        raise ValueError("measurement times must be non-negative")


def zeta_eval(model: ZetaModel, t_l, t_r):
    """Effective decoherence parameter of ``model`` at the measurement times.

    Works elementwise on arrays. SINGLE_TIME describes the unmeasured state
    at one time and therefore requires ``t_l == t_r``.
    """
    _check_times(t_l, t_r)
    t_l = np.asarray(t_l, dtype=float)
    t_r = np.asarray(t_r, dtype=float)
    kind = model.kind
    if kind is ZetaKind.CONSTANT:
        out = np.full(np.broadcast(t_l, t_r).shape, model.zeta)
    elif kind is ZetaKind.TWO_PARTICLE_MIN:
        out = -np.expm1(-model.lam * np.minimum(t_l, t_r))
    elif kind is ZetaKind.ONE_PARTICLE_SUM:
        out = -np.expm1(-model.lam * (t_l + t_r))
    else:
        if np.any(t_l != t_r):
            raise ValueError("single-time zeta needs t_l == t_r")
        out = -np.expm1(-model.lam * t_l)
    return out[()] if out.ndim == 0 else out


def _prob(outcome: TwoTimeOutcome, p: KaonParams, coherence: float) -> float:
    t_l, t_r = outcome.t_l, outcome.t_r
    incoherent = math.exp(-p.gamma_S * t_l - p.gamma_L * t_r) + math.exp(-p.gamma_L * t_l - p.gamma_S * t_r)
    interference = 2.0 * coherence * math.cos(p.delta_m * (t_l - t_r)) * math.exp(-p.gamma * (t_l + t_r))
    sign = -1.0 if outcome.like else 1.0
    # like-strangeness cancels exactly at equal times in pure QM; drop round-off below zero
    return max(0.0, (incoherent + sign * interference) / 8.0)


def prob_lambda(outcome: TwoTimeOutcome, p: KaonParams) -> float:
    """Joint probability of ``outcome`` in the decoherence model.

    The interference term is damped by exp(-lam * min(t_l, t_r)): only the
    time until the first measurement sees decoherence.
    """
    return _prob(outcome, p, math.exp(-p.lam * min(outcome.t_l, outcome.t_r)))


def prob_zeta(outcome: TwoTimeOutcome, p: KaonParams, zeta: float) -> float:
    """Joint probability with the interference term scaled by ``1 - zeta``."""
    if not 0.0 <= zeta <= 1.0:
        raise ValueError("zeta must lie in [0, 1]")
    return _prob(outcome, p, 1.0 - zeta)


def prob_lambda_sequential(outcome: TwoTimeOutcome, p: KaonParams) -> float:
    """Same probability as :func:`prob_lambda`, built by explicit measurements.

    The pair evolves under the master equation until the earlier detection;
    that particle is projected onto its strangeness, and the survivor then
    evolves as a single kaon under pure quantum mechanics until it is
    detected in turn.
    """
    if outcome.t_r > outcome.t_l:
        # the singlet is antisymmetric, so relabelling the sides is harmless
        return prob_lambda_sequential(outcome.swapped(), p)
    rho = evolve_2p_analytic(outcome.t_r, p).mat
    meas_r = tensor(np.eye(2), strangeness_projector(outcome.s_right))
    rho_l = partial_trace(meas_r @ rho, "right")
    rho_l = evolve_1p_analytic(DensityMatrix(rho_l), outcome.t_l - outcome.t_r, p.with_lambda(0.0))
    return float(np.trace(strangeness_projector(outcome.s_left) @ rho_l.mat).real)


def asymmetry_from_probs(probs: dict[tuple[Strangeness, Strangeness], float]) -> float:
    """(unlike - like) / (unlike + like) from the four coincidence probabilities."""
    like = sum(v for (a, b), v in probs.items() if a is b)
    unlike = sum(v for (a, b), v in probs.items() if a is not b)
    return (unlike - like) / (unlike + like)


def asymmetry_qm(dt, p: KaonParams, dt_scale: float = 1.0):
    """Quantum-mechanical asymmetry cos(dm dt) / cosh(dGamma dt / 2).

    ``dt_scale`` stretches the time difference before evaluation; 1 means no
    rescaling.
    """
    x = dt_scale * np.asarray(dt, dtype=float)
    out = np.cos(p.delta_m * x) / np.cosh(0.5 * p.delta_gamma * x)
    return out[()] if out.ndim == 0 else out


def asymmetry_lambda(t_l, t_r, p: KaonParams, dt_scale: float = 1.0):
    _check_times(t_l, t_r)
    t_l = np.asarray(t_l, dtype=float)
    t_r = np.asarray(t_r, dtype=float)
    return asymmetry_qm(t_l - t_r, p, dt_scale) * np.exp(-p.lam * np.minimum(t_l, t_r))


def asymmetry_zeta(t_l, t_r, p: KaonParams, model: ZetaModel, dt_scale: float = 1.0):
    zeta = zeta_eval(model, t_l, t_r)
    dt = np.asarray(t_l, dtype=float) - np.asarray(t_r, dtype=float)
    return asymmetry_qm(dt, p, dt_scale) * (1.0 - zeta)
