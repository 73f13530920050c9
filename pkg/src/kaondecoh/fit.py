"""Chi-square estimation of the decoherence strength from asymmetry data."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .constants import DEFAULT_CONSTANTS, Constants
from .evolution import KaonParams
from .observables import ZetaKind, ZetaModel, asymmetry_zeta, zeta_eval

__all__ = [
    "Config",
    "AsymmetryDataset",
    "DatasetParseError",
    "FitResult",
    "read_dataset",
    "write_dataset",
    "model_asymmetry",
    "chi2",
    "chi2_curve",
    "fit_lambda",
    "average_configs",
    "synth_dataset",
    "coverage_study",
    "config_times",
    "CSV_HEADER",
]

CSV_HEADER = ("t_l", "t_r", "asym", "sigma")
DEFAULT_LAMBDA_MAX = 10.0
# largest constant zeta searched; zeta = 1 maps to an infinite decoherence rate
ZETA_MAX = 1.0 - 1e-12
_SCAN_POINTS = 401


class Config(str, Enum):
    CFG_2CM_2CM = "2cm-2cm"
    CFG_2CM_7CM = "2cm-7cm"
    CUSTOM = "custom"


_CONFIG_DISTANCES_CM = {
    Config.CFG_2CM_2CM: (2.0, 2.0),
    Config.CFG_2CM_7CM: (7.0, 2.0),
}


def config_times(
    config: Config | str, p_kaon_momentum: float | None = None, constants: Constants = DEFAULT_CONSTANTS
) -> tuple[float, float]:
    """Proper times ``(t_l, t_r)`` in tau_S for a CPLEAR absorber configuration.

    By default distances map linearly to time through ``tau_S_per_cm``
    (2 cm <-> 0.55 tau_S). With a kaon momentum in MeV/c the time is
    ``L m_K / (p c tau_S)`` instead.
    """
    config = Config(config)
    if config is Config.CUSTOM:
        raise ValueError("custom configuration has no preset times; supply t_l and t_r explicitly")
    d_l, d_r = _CONFIG_DISTANCES_CM[config]
    if p_kaon_momentum is None:
        k = constants.tau_S_per_cm
    else:
        if not p_kaon_momentum > 0:
            raise ValueError("kaon momentum must be positive")
        k = constants.kaon_mass_mev / (p_kaon_momentum * constants.ctau_S_cm)
    return d_l * k, d_r * k


@dataclass(frozen=True, eq=False)
class AsymmetryDataset:
    """Measured asymmetries at pairs of detection times.

    Stored column-wise: ``t_l``, ``t_r`` (tau_S), ``asym`` and its standard
    error ``sigma``.
    """

    t_l: np.ndarray
    t_r: np.ndarray
    asym: np.ndarray
    sigma: np.ndarray
    label: str = ""
    config: Config | None = None

    def __post_init__(self):
        cols = [np.atleast_1d(np.asarray(getattr(self, k), dtype=float)) for k in CSV_HEADER]
        if len({c.shape for c in cols}) != 1 or cols[0].ndim != 1:
            raise ValueError("dataset columns must be 1-d and of equal length")
        for name, c in zip(CSV_HEADER, cols):
            c.setflags(write=False)
            object.__setattr__(self, name, c)
        if np.any(self.t_l < 0) or np.any(self.t_r < 0):
            raise ValueError("times must be non-negative")
        if not np.all(self.sigma > 0):
            raise ValueError("every standard error must be positive")
        if self.config is not None:
            object.__setattr__(self, "config", Config(self.config))

    def __len__(self) -> int:
        return len(self.t_l)

    @property
    def records(self) -> list[tuple[float, float, float, float]]:
        return [tuple(map(float, r)) for r in zip(self.t_l, self.t_r, self.asym, self.sigma)]

    @classmethod
    def from_records(cls, records, label: str = "", config=None) -> AsymmetryDataset:
        arr = np.asarray(list(records), dtype=float).reshape(-1, 4)
        return cls(*arr.T, label=label, config=config)


class DatasetParseError(ValueError):
    def __init__(self, source: str, lineno: int, msg: str):
        super().__init__(f"{source}:{lineno}: {msg}")
        self.source = source
        self.lineno = lineno


def read_dataset(path: str | Path, label: str | None = None, config=None) -> AsymmetryDataset:
    """Parse a dataset CSV (header ``t_l,t_r,asym,sigma``; ``#`` comments).

    Comments of the form ``# label: ...`` and ``# config: ...`` (as written
    by :func:`write_dataset`) fill ``label`` and ``config`` unless given
    explicitly. The label otherwise defaults to the file stem.
    """
    path = Path(path)
    source = str(path)
    rows = []
    meta = {}
    header_seen = False
    with path.open(newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if text.startswith("#"):
                key, sep, value = text[1:].partition(":")
                if sep and key.strip() in ("label", "config"):
                    meta[key.strip()] = value.strip()
                continue
            if not text:
                continue
            cells = [c.strip() for c in next(csv.reader([text]))]
            if not header_seen:
                if tuple(cells) != CSV_HEADER:
                    raise DatasetParseError(source, lineno, f"expected header {','.join(CSV_HEADER)}")
                header_seen = True
                continue
            if len(cells) != 4:
                raise DatasetParseError(source, lineno, f"expected 4 fields, got {len(cells)}")
            try:
                row = [float(c) for c in cells]
            except ValueError:
                raise DatasetParseError(source, lineno, "non-numeric field") from None
            if row[0] < 0 or row[1] < 0:
                raise DatasetParseError(source, lineno, "negative time")
            if not row[3] > 0:
                raise DatasetParseError(source, lineno, "sigma must be positive")
            rows.append(row)
    if not header_seen:
        raise DatasetParseError(source, 1, "missing header")
    if not rows:
        raise DatasetParseError(source, lineno if header_seen else 1, "no data rows")
    if label is None:
        label = meta.get("label", path.stem)
    if config is None and "config" in meta:
        try:
            config = Config(meta["config"])
        except ValueError:
            raise DatasetParseError(source, 1, f"unknown config {meta['config']!r}") from None
    return AsymmetryDataset.from_records(rows, label=label, config=config)


def write_dataset(ds: AsymmetryDataset, path: str | Path | None = None) -> str:
    """Serialize ``ds`` as CSV; returns the text and writes it when ``path`` is given."""
    buf = io.StringIO()
    if ds.label:
        buf.write(f"# label: {ds.label}\n")
    if ds.config is not None:
        buf.write(f"# config: {ds.config.value}\n")
    buf.write(",".join(CSV_HEADER) + "\n")
    for rec in ds.records:
        buf.write(",".join(f"{v:.17g}" for v in rec) + "\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _bind(model: ZetaModel, p: KaonParams) -> ZetaModel:
    # time-dependent kinds take their rate from the kaon parameters
    if model.kind is ZetaKind.CONSTANT:
        return model
    return model.with_parameter(p.lam)


def model_asymmetry(ds: AsymmetryDataset, p: KaonParams, model: ZetaModel, dt_scale: float = 1.0) -> np.ndarray:
    return np.atleast_1d(asymmetry_zeta(ds.t_l, ds.t_r, p, _bind(model, p), dt_scale))


def chi2(ds: AsymmetryDataset, p: KaonParams, model: ZetaModel = ZetaModel(), dt_scale: float = 1.0) -> float:
    """Sum of squared normalized residuals.

    For time-dependent zeta models the decoherence rate is ``p.lam``; the
    CONSTANT model uses ``model.zeta``.
    """
    if len(ds) == 0:
        raise ValueError("cannot evaluate chi-square on an empty dataset")
    r = (ds.asym - model_asymmetry(ds, p, model, dt_scale)) / ds.sigma
    return float(r @ r)


def chi2_curve(
    ds: AsymmetryDataset, p: KaonParams, model: ZetaModel, values, dt_scale: float = 1.0
) -> np.ndarray:
    """Chi-square as a function of the model's free parameter, vectorized."""
    if len(ds) == 0:
        raise ValueError("cannot evaluate chi-square on an empty dataset")
    values = np.asarray(values, dtype=float)[:, None]
    a_qm = np.cos(p.delta_m * dt_scale * (ds.t_l - ds.t_r)) / np.cosh(0.5 * p.delta_gamma * dt_scale * (ds.t_l - ds.t_r))
    if model.kind is ZetaKind.CONSTANT:
        damp = 1.0 - values
    else:
        if model.kind is ZetaKind.TWO_PARTICLE_MIN:
            tau = np.minimum(ds.t_l, ds.t_r)
        elif model.kind is ZetaKind.ONE_PARTICLE_SUM:
            tau = ds.t_l + ds.t_r
        else:
            if np.any(ds.t_l != ds.t_r):
                raise ValueError("single-time zeta needs t_l == t_r")
            tau = ds.t_l
        damp = np.exp(-values * tau)
    r = (ds.asym - a_qm * damp) / ds.sigma
    return np.einsum("ij,ij->i", r, r)


@dataclass(frozen=True)
class FitResult:
    """Outcome of a one-parameter chi-square fit.

    ``lambda_err_lo`` / ``lambda_err_hi`` are the endpoints of the
    Delta chi^2 = 1 interval (not distances from the estimate). When the
    CONSTANT zeta model is fitted, the lambda fields hold the rate that gives
    the same zeta at the dataset's mean first-detection time.
    """

    lambda_hat: float
    lambda_err_lo: float
    lambda_err_hi: float
    chi2_min: float
    ndf: int
    zeta_hat: float
    zeta_err_lo: float = math.nan
    zeta_err_hi: float = math.nan
    model: str = ZetaKind.TWO_PARTICLE_MIN.value
    boundary: bool = False
    interval_closed: bool = True
    label: str = ""
    gamma_S_mev: float = DEFAULT_CONSTANTS.gamma_S_mev
    per_config: tuple[FitResult, ...] = field(default=())

    @property
    def lambda_mev(self) -> float:
        return self.lambda_hat * self.gamma_S_mev

    @property
    def sigma_sym(self) -> float:
        """Symmetrized one-sigma error (half the interval width)."""
        return 0.5 * (self.lambda_err_hi - self.lambda_err_lo)

    def covers(self, lam: float) -> bool:
        return self.lambda_err_lo <= lam <= self.lambda_err_hi

    def to_dict(self) -> dict:
        d = {
            "lambda_hat": self.lambda_hat,
            "lambda_err_lo": self.lambda_err_lo,
            "lambda_err_hi": self.lambda_err_hi,
            "lambda_mev": self.lambda_mev,
            "lambda_err_lo_mev": self.lambda_err_lo * self.gamma_S_mev,
            "lambda_err_hi_mev": self.lambda_err_hi * self.gamma_S_mev,
            "chi2_min": self.chi2_min,
            "ndf": self.ndf,
            "zeta_hat": self.zeta_hat,
            "zeta_err_lo": self.zeta_err_lo,
            "zeta_err_hi": self.zeta_err_hi,
            "model": self.model,
            "boundary": self.boundary,
            "interval_closed": self.interval_closed,
            "label": self.label,
        }
        for k, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = None
        if self.per_config:
            d["per_config"] = [r.to_dict() for r in self.per_config]
        return d


def _mean_first_time(ds: AsymmetryDataset) -> float:
    return float(np.mean(np.minimum(ds.t_l, ds.t_r)))


def _zeta_of_lambda(ds: AsymmetryDataset, model: ZetaModel, lam: float) -> float:
    kind = model.kind
    if kind is ZetaKind.CONSTANT:
        kind = ZetaKind.TWO_PARTICLE_MIN
    return float(np.mean(zeta_eval(ZetaModel(kind, lam=lam), ds.t_l, ds.t_r)))


def fit_lambda(
    ds: AsymmetryDataset,
    p0: KaonParams,
    model: ZetaModel = ZetaModel(),
    lambda_max: float = DEFAULT_LAMBDA_MAX,
    dt_scale: float = 1.0,
    constants: Constants = DEFAULT_CONSTANTS,
) -> FitResult:
    """Minimize chi-square over the model's free parameter.

    For the time-dependent zeta models the parameter is the decoherence rate
    in ``[0, lambda_max]``; for the CONSTANT model it is zeta itself in
    ``[0, 1)``. All other kaon parameters stay fixed at ``p0``.

    A coarse scan locates the basin, bounded Brent (golden section with
    parabolic steps) polishes it, and the interval endpoints are the
    crossings of ``chi2_min + 1``. If the minimum sits on a domain edge the
    result is flagged ``boundary``; an interval that does not close inside
    the domain is clipped to the edge and flagged via ``interval_closed``.
    """
    n = len(ds)
    if n == 0:
        raise ValueError("cannot fit an empty dataset")
    const = model.kind is ZetaKind.CONSTANT
    lo, hi = (0.0, ZETA_MAX) if const else (0.0, float(lambda_max))
    if not hi > lo:
        raise ValueError("lambda_max must be positive")

    def f(x):
        return float(chi2_curve(ds, p0, model, [x], dt_scale)[0])

    grid = np.linspace(lo, hi, _SCAN_POINTS)
    curve = chi2_curve(ds, p0, model, grid, dt_scale)
    i = int(np.argmin(curve))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-12 * max(1.0, hi)})
    x_hat, f_min = float(res.x), float(res.fun)
    for edge in (a, b):
        if f(edge) < f_min:
            x_hat, f_min = float(edge), f(edge)

    target = f_min + 1.0
    closed = True
    if f(lo) > target and x_hat > lo:
        x_lo = brentq(lambda x: f(x) - target, lo, x_hat, xtol=1e-14)
    else:
        x_lo, closed = lo, False
    if f(hi) > target and x_hat < hi:
        x_hi = brentq(lambda x: f(x) - target, x_hat, hi, xtol=1e-14)
    else:
        x_hi, closed = hi, False
    edge_tol = 1e-9 * (hi - lo)
    boundary = x_hat - lo < edge_tol or hi - x_hat < edge_tol

    if const:
        t_ref = _mean_first_time(ds)
        if t_ref <= 0:
            raise ValueError("constant-zeta fit needs a positive first-detection time to quote lambda")
        to_lam = lambda z: -math.log1p(-z) / t_ref  # noqa: E731
        lam_hat, lam_lo, lam_hi = to_lam(x_hat), to_lam(x_lo), to_lam(x_hi)
        z_hat, z_lo, z_hi = x_hat, x_lo, x_hi
    else:
        lam_hat, lam_lo, lam_hi = x_hat, x_lo, x_hi
        z_hat, z_lo, z_hi = (_zeta_of_lambda(ds, model, v) for v in (x_hat, x_lo, x_hi))

    return FitResult(
        lambda_hat=lam_hat,
        lambda_err_lo=lam_lo,
        lambda_err_hi=lam_hi,
        chi2_min=max(0.0, f_min),
        ndf=n - 1,
        zeta_hat=z_hat,
        zeta_err_lo=z_lo,
        zeta_err_hi=z_hi,
        model=model.kind.value,
        boundary=boundary,
        interval_closed=closed,
        label=ds.label,
        gamma_S_mev=constants.gamma_S_mev,
    )


def average_configs(results: Sequence[FitResult]) -> FitResult:
    """Inverse-variance average of per-configuration fits.

    Each input contributes with weight ``1 / sigma^2`` where sigma is its
    symmetrized error; the averaged interval is ``mean +- 1/sqrt(sum w)``.
    ``zeta_hat`` is averaged with the same weights. A single result is
    returned unchanged.
    """
    results = list(results)
    if not results:
        raise ValueError("nothing to average")
    if len(results) == 1:
        return results[0]
    sig = np.array([r.sigma_sym for r in results])
    if np.any(sig <= 0):
        raise ValueError("every result needs a non-degenerate error interval")
    # order-independent sums
    order = np.lexsort((sig, [r.lambda_hat for r in results]))
    w = 1.0 / sig[order] ** 2
    lam = np.array([results[k].lambda_hat for k in order])
    zeta = np.array([results[k].zeta_hat for k in order])
    wsum = math.fsum(w)
    mean = math.fsum(w * lam) / wsum
    err = 1.0 / math.sqrt(wsum)
    models = {r.model for r in results}
    return FitResult(
        lambda_hat=mean,
        lambda_err_lo=mean - err,
        lambda_err_hi=mean + err,
        chi2_min=math.fsum(r.chi2_min for r in results),
        ndf=sum(r.ndf for r in results),
        zeta_hat=math.fsum(w * zeta) / wsum,
        model=models.pop() if len(models) == 1 else "mixed",
        boundary=any(r.boundary for r in results),
        interval_closed=all(r.interval_closed for r in results),
        label="average",
        gamma_S_mev=results[0].gamma_S_mev,
        per_config=tuple(results[k] for k in order),
    )


def synth_dataset(
    p: KaonParams,
    model: ZetaModel,
    t_grid: Sequence[tuple[float, float]],
    sigma: float,
    seed: int | Sequence[int] = 0,
    dt_scale: float = 1.0,
    label: str = "synthetic",
    config: Config | None = None,
) -> AsymmetryDataset:
    """Model asymmetries plus Gaussian noise of width ``sigma``.

    Noise comes from numpy's PCG64 generator seeded with ``seed`` (an int,
    or a tuple such as ``(seed, trial)`` for independent Monte Carlo
    streams). With ``sigma == 0`` the data are exact and every record gets
    unit error so the chi-square stays defined.
    """
    if not sigma >= 0:
        raise ValueError("sigma must be non-negative")
    times = np.asarray(t_grid, dtype=float).reshape(-1, 2)
    t_l, t_r = times[:, 0], times[:, 1]
    exact = np.atleast_1d(asymmetry_zeta(t_l, t_r, p, _bind(model, p), dt_scale))
    rng = np.random.Generator(np.random.PCG64(seed))
    noise = rng.normal(0.0, sigma, size=exact.shape) if sigma > 0 else np.zeros_like(exact)
    err = np.full_like(exact, sigma if sigma > 0 else 1.0)
    return AsymmetryDataset(t_l, t_r, exact + noise, err, label=label, config=config)


def coverage_study(
    p: KaonParams,
    model: ZetaModel,
    t_grid: Sequence[tuple[float, float]],
    sigma: float,
    n_trials: int,
    seed: int = 0,
    lambda_max: float = DEFAULT_LAMBDA_MAX,
) -> float:
    """Fraction of noisy pseudo-experiments whose interval covers the true rate.

    Trial ``k`` draws its noise from the stream seeded by ``(seed, k)``.
    """
    truth = model.zeta if model.kind is ZetaKind.CONSTANT else p.lam
    hits = 0
    for k in range(n_trials):
        ds = synth_dataset(p, model, t_grid, sigma, seed=(seed, k))
        res = fit_lambda(ds, replace(p, lam=0.0), model, lambda_max=lambda_max)
        lo, hi = (res.zeta_err_lo, res.zeta_err_hi) if model.kind is ZetaKind.CONSTANT else (res.lambda_err_lo, res.lambda_err_hi)
        hits += lo <= truth <= hi
    return hits / n_trials
