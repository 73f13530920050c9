"""Command-line interface.

Usage::

    kaondecoh evolve --lambda 0.25 --t-max 5 --step 0.05 --oracle
    kaondecoh asymmetry --mode equal --lambda 0.25 --t-max 3 --step 0.1
    kaondecoh entangle --lambda 0.25 --t 0.55
    kaondecoh sweep --t-max 5 --step 0.05 -o fig1.csv
    kaondecoh synth --lambda 0.25 --sigma 0.02 --seed 1 -o data.csv
    kaondecoh fit data.csv --model min

Exit codes: 0 success, 1 computation error, 2 bad input.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from .constants import Constants, load_constants
from .entanglement import entanglement_report
from .evolution import (
    DEFAULT_RK_STEP,
    KaonParams,
    effective_hamiltonian,
    evolve_1p_analytic,
    evolve_2p_analytic,
    evolve_numeric_path,
    lindblad_operators,
    singlet_state,
)
from .fit import (
    DEFAULT_LAMBDA_MAX,
    Config,
    DatasetParseError,
    average_configs,
    config_times,
    fit_lambda,
    read_dataset,
    synth_dataset,
    write_dataset,
)
from .observables import ZetaKind, ZetaModel, asymmetry_lambda, asymmetry_qm, asymmetry_zeta, strangeness_projector, Strangeness
from .qmat import DensityMatrix

__all__ = ["cli", "main"]

EXIT_COMPUTE = 1
EXIT_INPUT = 2

# reference decoherence strengths (MeV): central value and upper bound from CPLEAR
REFERENCE_LAMBDAS_MEV = (1.84e-12, 4.34e-12)


class InputError(click.ClickException):
    exit_code = EXIT_INPUT


class ComputeError(click.ClickException):
    exit_code = EXIT_COMPUTE


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if rows:
        writer.writerow(rows[0].keys())
        for r in rows:
            writer.writerow([_fmt(v) for v in r.values()])
    return buf.getvalue()


def _emit(text: str, output: Path | None):
    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text)


def _check_output(output: Path | None):
    if output is not None and not output.parent.exists():
        raise InputError(f"output directory does not exist: {output.parent}")


def _grid(t_min: float, t_max: float, step: float) -> np.ndarray:
    if not step > 0:
        raise InputError("--step must be positive")
    if t_max < t_min:
        raise InputError("--t-max must not be smaller than --t-min")
    n = int(math.floor((t_max - t_min) / step + 1e-9)) + 1
    return t_min + step * np.arange(n)


class _Context:
    def __init__(self, constants: Constants, units: str, gamma_L, delta_m):
        self.constants = constants
        self.units = units
        self.gamma_L = constants.gamma_L if gamma_L is None else gamma_L
        self.delta_m = constants.delta_m if delta_m is None else delta_m

    def lam_in(self, value: float) -> float:
        """Convert a user-supplied rate to Gamma_S units."""
        return self.constants.lambda_from_mev(value) if self.units == "mev" else value

    def lam_out(self, value: float) -> float:
        return self.constants.lambda_to_mev(value) if self.units == "mev" else value

    def params(self, lam: float = 0.0) -> KaonParams:
        try:
            return KaonParams(gamma_L=self.gamma_L, delta_m=self.delta_m, lam=lam)
        except ValueError as exc:
            raise InputError(str(exc)) from None


def common_options(f):
    f = click.option("--gamma-L", "gamma_L", type=float, default=None, help="Override Gamma_L / Gamma_S.")(f)
    f = click.option("--delta-m", type=float, default=None, help="Override Delta m / Gamma_S.")(f)
    f = click.option(
        "--units", type=click.Choice(["gamma", "mev"]), default="gamma", show_default=True,
        help="Units of decoherence rates on input and output.",
    )(f)
    f = click.option(
        "--constants", "constants_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
        help="Constants file (key = value).",
    )(f)
    return f


def _context(constants_path, units, gamma_L, delta_m) -> _Context:
    try:
        constants = load_constants(constants_path)
    except FileNotFoundError:
        raise InputError(f"constants file not found: {constants_path}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return _Context(constants, units, gamma_L, delta_m)


def grid_options(f):
    f = click.option("--step", type=float, default=0.05, show_default=True)(f)
    f = click.option("--t-max", type=float, default=5.0, show_default=True)(f)
    f = click.option("--t-min", type=float, default=0.0, show_default=True)(f)
    return f


def output_options(f):
    f = click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)(f)
    f = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)(f)
    return f


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Decoherence and entanglement loss of neutral-kaon pairs."""


@cli.command()
@click.option("--lambda", "lam", type=float, default=0.0, show_default=True, help="Decoherence strength.")
@click.option("--particles", type=click.Choice(["1", "2"]), default="2", show_default=True)
@click.option("--initial", type=click.Choice(["K0", "K0bar"]), default="K0", show_default=True,
              help="Initial single-kaon state (one-particle mode).")
@click.option("--oracle", is_flag=True, help="Add the max deviation from the RK4 integrator.")
@click.option("--rk-step", type=float, default=DEFAULT_RK_STEP, show_default=True)
@grid_options
@output_options
@common_options
def evolve(lam, particles, initial, oracle, rk_step, t_min, t_max, step, fmt, output, constants_path, units, gamma_L, delta_m):
    """Closed-form density matrix on a time grid."""
    ctx = _context(constants_path, units, gamma_L, delta_m)
    _check_output(output)
    ts = _grid(t_min, t_max, step)
    if ts[0] < 0:
        raise InputError("times must be non-negative")
    if not rk_step > 0:
        raise InputError("--rk-step must be positive")
    p = ctx.params(ctx.lam_in(lam))
    n = int(particles)
    try:
        if n == 1:
            rho0 = strangeness_projector(Strangeness.PLUS if initial == "K0" else Strangeness.MINUS)
            exact = [evolve_1p_analytic(DensityMatrix(rho0), t, p).mat for t in ts]
            coh = (0, 1)
        else:
            rho0 = singlet_state().mat
            exact = [evolve_2p_analytic(t, p).mat for t in ts]
            coh = (1, 2)
        numeric = None
        if oracle:
            numeric = evolve_numeric_path(rho0, effective_hamiltonian(p, n), lindblad_operators(p, n), ts, rk_step)
    except ValueError as exc:
        raise ComputeError(str(exc)) from None
    dim = exact[0].shape[0]
    rows = []
    for k, t in enumerate(ts):
        m = exact[k]
        row = {"t": float(t)}
        for i in range(dim):
            for j in range(i, dim):
                row[f"re_{i}{j}"] = float(m[i, j].real)
                row[f"im_{i}{j}"] = float(m[i, j].imag)
        row["offdiag_abs"] = float(abs(m[coh]))
        if numeric is not None:
            row["oracle_max_dev"] = float(np.max(np.abs(numeric[k] - m)))
        rows.append(row)
    _emit(_render(rows, fmt), output)


@cli.command()
@click.option("--mode", type=click.Choice(["dt", "equal"]), default="dt", show_default=True,
              help="dt: grid over t_l - t_r at fixed t_r; equal: t_l = t_r = t.")
@click.option("--t-r", "t_r", type=float, default=None, help="Right detection time for --mode dt [default: 0.55].")
@click.option("--config", type=click.Choice([c.value for c in Config]), default=None,
              help="Take t_r from an absorber configuration.")
@click.option("--lambda", "lam", type=float, default=0.0, show_default=True)
@click.option("--zeta", type=float, default=None, help="Add a constant-zeta column.")
@click.option("--dt-scale", type=float, default=1.0, show_default=True, help="Rescale dt inside A_QM.")
@grid_options
@output_options
@common_options
def asymmetry(mode, t_r, config, lam, zeta, dt_scale, t_min, t_max, step, fmt, output, constants_path, units, gamma_L, delta_m):
    """QM and decoherence-model asymmetries."""
    ctx = _context(constants_path, units, gamma_L, delta_m)
    _check_output(output)
    grid = _grid(t_min, t_max, step)
    if config is not None:
        try:
            t_r = config_times(config, constants=ctx.constants)[1]
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if mode == "equal":
        t_l = t_r_arr = grid
    else:
        t_r = 0.55 if t_r is None else t_r
        t_l, t_r_arr = t_r + grid, np.full_like(grid, t_r)
    if np.any(t_l < 0) or np.any(t_r_arr < 0):
        raise InputError("grid produces negative detection times")
    if zeta is not None and not 0.0 <= zeta <= 1.0:
        raise InputError("--zeta must lie in [0, 1]")
    p = ctx.params(ctx.lam_in(lam))
    cols = {
        "t_l": t_l,
        "t_r": t_r_arr,
        "dt": t_l - t_r_arr,
        "A_QM": asymmetry_qm(t_l - t_r_arr, p, dt_scale),
        "A_lambda": asymmetry_lambda(t_l, t_r_arr, p, dt_scale),
        "A_zeta_min": asymmetry_zeta(t_l, t_r_arr, p, ZetaModel(ZetaKind.TWO_PARTICLE_MIN, lam=p.lam), dt_scale),
        "A_zeta_sum": asymmetry_zeta(t_l, t_r_arr, p, ZetaModel(ZetaKind.ONE_PARTICLE_SUM, lam=p.lam), dt_scale),
    }
    if zeta is not None:
        cols["A_zeta_const"] = asymmetry_zeta(t_l, t_r_arr, p, ZetaModel(ZetaKind.CONSTANT, zeta=zeta), dt_scale)
    rows = [{k: float(v[i]) for k, v in cols.items()} for i in range(len(grid))]
    _emit(_render(rows, fmt), output)


def _report_row(rep, lam_out: float) -> dict:
    d = rep.to_dict()
    bell = d.pop("bell")
    row = {"lambda": lam_out}
    row.update(d)
    row.update({f"bell_{k[2:]}": v for k, v in bell.items()})
    return row


@cli.command()
@click.option("--lambda", "lam", type=float, default=0.25, show_default=True)
@click.option("--t", "t", type=float, default=0.55, show_default=True, help="Time in tau_S.")
@output_options
@common_options
def entangle(lam, t, fmt, output, constants_path, units, gamma_L, delta_m):
    """Full entanglement report at a single time."""
    ctx = _context(constants_path, units, gamma_L, delta_m)
    _check_output(output)
    if t < 0:
        raise InputError("--t must be non-negative")
    p = ctx.params(ctx.lam_in(lam))
    try:
        rep = entanglement_report(t, p)
    except ValueError as exc:
        raise ComputeError(str(exc)) from None
    _emit(_render([_report_row(rep, ctx.lam_out(p.lam))], fmt), output)


@cli.command()
@click.option("--lambda", "lams", type=float, multiple=True,
              help="Decoherence strength; repeatable. Default: CPLEAR mean and upper bound.")
@grid_options
@output_options
@common_options
def sweep(lams, t_min, t_max, step, fmt, output, constants_path, units, gamma_L, delta_m):
    """Entropy and entanglement losses versus time (one block per lambda)."""
    ctx = _context(constants_path, units, gamma_L, delta_m)
    _check_output(output)
    ts = _grid(t_min, t_max, step)
    if ts[0] < 0:
        raise InputError("times must be non-negative")
    if lams:
        rates = [ctx.lam_in(v) for v in lams]
    else:
        rates = [ctx.constants.lambda_from_mev(v) for v in REFERENCE_LAMBDAS_MEV]
    rows = []
    for lam in rates:
        p = ctx.params(lam)
        for t in ts:
            rep = entanglement_report(t, p)
            rows.append({
                "lambda": ctx.lam_out(lam),
                "t": float(t),
                "entropy": rep.entropy,
                "loss_E": rep.loss_E,
                "loss_C": rep.loss_C,
                "zeta": rep.zeta,
            })
    _emit(_render(rows, fmt), output)


_MODEL_CHOICES = [k.value for k in ZetaKind]


@cli.command()
@click.option("--lambda", "lam", type=float, default=0.25, show_default=True)
@click.option("--model", type=click.Choice(_MODEL_CHOICES), default="min", show_default=True)
@click.option("--zeta", type=float, default=0.0, show_default=True, help="Value for --model const.")
@click.option("--sigma", type=float, default=0.02, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--layout", type=click.Choice(["equal", "dt"]), default="equal", show_default=True)
@click.option("--n", "n_points", type=int, default=40, show_default=True)
@click.option("--t-min", type=float, default=0.1, show_default=True)
@click.option("--t-max", type=float, default=3.0, show_default=True)
@click.option("--t-r", "t_r", type=float, default=0.55, show_default=True, help="Fixed t_r for --layout dt.")
@click.option("--config", type=click.Choice([c.value for c in Config if c is not Config.CUSTOM]), default=None,
              help="Single-point dataset at the configuration's detection times (repeated --n times).")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)
@common_options
def synth(lam, model, zeta, sigma, seed, layout, n_points, t_min, t_max, t_r, config, output,
          constants_path, units, gamma_L, delta_m):
    """Write a synthetic asymmetry dataset CSV."""
    ctx = _context(constants_path, units, gamma_L, delta_m)
    _check_output(output)
    if n_points < 1:
        raise InputError("--n must be at least 1")
    if config is not None:
        grid = [config_times(config, constants=ctx.constants)] * n_points
    elif layout == "equal":
        grid = [(t, t) for t in np.linspace(t_min, t_max, n_points)]
    else:
        grid = [(t_r + d, t_r) for d in np.linspace(t_min, t_max, n_points)]
    if any(a < 0 or b < 0 for a, b in grid):
        raise InputError("grid produces negative detection times")
    try:
        zm = ZetaModel(ZetaKind(model), zeta=zeta)
        ds = synth_dataset(ctx.params(ctx.lam_in(lam)), zm, grid, sigma, seed=seed, config=config)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(write_dataset(ds), output)


@cli.command()
@click.argument("datasets", nargs=-1, required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--model", type=click.Choice(_MODEL_CHOICES), default="min", show_default=True)
@click.option("--lambda-max", type=float, default=None,
              help=f"Upper edge of the search domain [default: {DEFAULT_LAMBDA_MAX} Gamma_S].")
@click.option("--dt-scale", type=float, default=1.0, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)
@common_options
def fit(datasets, model, lambda_max, dt_scale, output, constants_path, units, gamma_L, delta_m):
    """Fit lambda to one or more dataset CSVs (several files are averaged)."""
    ctx = _context(constants_path, units, gamma_L, delta_m)
    _check_output(output)
    lam_max = DEFAULT_LAMBDA_MAX if lambda_max is None else ctx.lam_in(lambda_max)
    loaded = []
    for path in datasets:
        if not path.exists():
            raise InputError(f"dataset not found: {path}")
        try:
            loaded.append(read_dataset(path))
        except DatasetParseError as exc:
            raise InputError(f"parse error at {exc}") from None
    p0 = ctx.params()
    try:
        results = [
            fit_lambda(ds, p0, ZetaModel(ZetaKind(model)), lambda_max=lam_max, dt_scale=dt_scale, constants=ctx.constants)
            for ds in loaded
        ]
        result = average_configs(results)
    except ValueError as exc:
        raise ComputeError(str(exc)) from None
    for r in results:
        if r.boundary:
            click.echo(f"warning: {r.label or 'fit'}: minimum on the boundary of the search domain", err=True)
    _emit(json.dumps(result.to_dict(), indent=2) + "\n", output)


def main(argv=None):
    return cli.main(args=argv, prog_name="kaondecoh")


if __name__ == "__main__":
    sys.exit(main())
