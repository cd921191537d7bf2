"""Command-line driver.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 partial sweep or scan.
"""
import functools
import json
import logging
import os
import sys

import click
import numpy as np
from pydantic import ValidationError

from app import create_app
from config import Config
from models.excitation import Modulation
from models.report import FitFormulaParams
from models.run import POST_PULSE_MARGIN, RunConfig
from models.timeseries import ETOT
from services.figures import FIGURES, figure_emit
from services.fit_formula import eval_fit_formula
from services.frequency_service import FrequencyService, calibrate_fit_formula
from services.record_service import RunRecordService
from services.resonance import compare_drives, scan_resonance
from services.runner import compute_ground_state, load_records, load_spectra, persist_spectrum, run_single, \
    run_sweep
from utils.database import init_db
from utils.errors import ConfigError, SimulationError
from utils.helpers import configure_logging
from utils.storage import read_columns, write_columns

PARTIAL_EXIT_CODE = 3


def parse_floats(text):
    """'0.1,1,10' or 'start:stop:step' (stop included)."""
    if text is None:
        return []
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError as e:
            raise ConfigError(f"Cannot read range '{text}', expected start:stop:step: {e}") from e
        if step <= 0.0:
            raise ConfigError("Range step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(count)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"Cannot read number list '{text}': {e}") from e


def _guarded(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            code = command(*args, **kwargs)
        except ValidationError as e:
            click.echo(f"Configuration error: {e}", err=True)
            sys.exit(1)
        except SimulationError as e:
            click.echo(f"{type(e).__name__}: {e}", err=True)
            sys.exit(e.exit_code)
        except ValueError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(1)
        sys.exit(code or 0)

    return wrapper


def _merge(base, update):
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


def load_config(path=None, **overrides) -> RunConfig:
    """Config file (JSON) with command-line overrides on top."""
    data = {}
    if path:
        try:
            with open(path) as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config file {path}: {e}") from e
    system = {k: overrides.pop(k) for k in ("dimension", "coupling", "symmetry", "softening")
              if overrides.get(k) is not None}
    solver = {k: overrides.pop(k) for k in ("method", "representation", "grid_points", "basis_size", "time_step")
              if overrides.get(k) is not None}
    update = {k: v for k, v in overrides.items() if v is not None}
    if system:
        update["system"] = system
    if solver:
        update["solver"] = solver
    try:
        return RunConfig.model_validate(_merge(data, update))
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def _store():
    if not Config.RECORD_STORE_ENABLED:
        return None
    init_db()
    return RunRecordService()


def system_options(command):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="Run configuration (JSON)"),
        click.option("--dimension", type=click.Choice(["1", "2"]), callback=lambda c, p, v: int(v) if v else None),
        click.option("--coupling", type=float),
        click.option("--symmetry", type=click.Choice(["symmetric", "antisymmetric"])),
        click.option("--softening", type=float),
        click.option("--method", type=click.Choice(["grid", "basis"])),
        click.option("--representation", type=click.Choice(["separated", "pair"])),
        click.option("--grid-points", type=int),
        click.option("--basis-size", type=int),
        click.option("--time-step", type=float),
        click.option("--output-dir", type=click.Path(file_okay=False)),
        click.option("--workers", type=int),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@click.group()
@click.option("--log-level", default=None, help="Overrides LOG_LEVEL")
def cli(log_level):
    """Breathing modes of two interacting particles in a harmonic trap."""
    configure_logging(log_level)


@cli.command()
@system_options
@click.option("--checkpoint-dir", type=click.Path(file_okay=False), help="Write grid ground states here")
@_guarded
def ground(config_path, checkpoint_dir, **overrides):
    """Ground-state energy of the configured system."""
    config = load_config(config_path, **overrides)
    energy, mapped = compute_ground_state(config, checkpoint_dir)
    click.echo(json.dumps({"ground_energy": energy, "bose_fermi_mapped": mapped}, indent=2))


@cli.command()
@system_options
@_guarded
def run(config_path, **overrides):
    """One run: kick or modulation, propagation, analysis."""
    config = load_config(config_path, **overrides)
    record = run_single(config, _store())
    click.echo(json.dumps(record.summary(), indent=2, sort_keys=True))
    return record.exit_code


@cli.command()
@system_options
@click.option("--couplings", help="Comma list or start:stop:step")
@_guarded
def sweep(config_path, couplings, **overrides):
    """Runs over a coupling grid through the worker pool; writes curve.dat."""
    config = load_config(config_path, couplings=parse_floats(couplings) or None, **overrides)
    result = run_sweep(config, _store())
    click.echo(result.curve_path)
    for record in result.records:
        if record.status != "completed":
            click.echo(f"failed lambda={record.config.system.coupling}: {record.stage}: {record.error}", err=True)
    return result.exit_code


@cli.command()
@system_options
@click.option("--frequencies", default="1.5:2.3:0.005", show_default=True, help="Drive frequencies")
@click.option("--couplings", help="Scan each of these couplings")
@click.option("--drive-ratios", help="Instead of a scan, drive at these multiples of omega_r")
@_guarded
def scan(config_path, frequencies, couplings, drive_ratios, **overrides):
    """Resonance spectra E_inf(omega_ext) with the modulation protocol."""
    config = load_config(config_path, **overrides)
    if not isinstance(config.protocol, Modulation):
        protocol = Modulation(frequency=2.0)
        config = config.model_copy(update={"protocol": protocol,
                                           "duration": max(config.duration, protocol.end_time + POST_PULSE_MARGIN)})

    if drive_ratios:
        responses = compare_drives(config.system, parse_floats(drive_ratios), config=config)
        series = responses[0].series
        columns = {"t": series.times}
        for response in responses:
            columns[f"E_tot_{response.alpha:g}"] = response.series.channel(ETOT)
        path = os.path.join(config.output_dir, "drives.dat")
        write_columns(path, columns, {"drives": [r.model_dump(mode="json") for r in responses]})
        for response in responses:
            click.echo(f"alpha={response.alpha:g} omega_ext={response.frequency:.5f} "
                       f"E_inf={response.asymptotic_energy:.8f}")
        return 0

    partial = False
    for lam in parse_floats(couplings) or [config.system.coupling]:
        spectrum = scan_resonance(config.system.with_coupling(lam), parse_floats(frequencies), config=config)
        persist_spectrum(spectrum, config)
        peaks = ", ".join(f"{p.center:.4f} (area {p.area:.3e})" for p in spectrum.peaks) or "none"
        click.echo(f"lambda={lam:g}: peaks {peaks}")
        partial = partial or spectrum.partial
    return PARTIAL_EXIT_CODE if partial else 0


@cli.command()
@system_options
@click.option("--model", type=click.Choice(["hartree", "semiclassical", "classical", "gap"]), default="hartree")
@click.option("--couplings", help="Comma list or start:stop:step")
@_guarded
def meanfield(config_path, model, couplings, **overrides):
    """Frequencies that need no propagation: mean-field limits, classical limit, diagonalization gap."""
    config = load_config(config_path, **overrides)
    for lam in parse_floats(couplings) or [config.system.coupling]:
        service = FrequencyService(config.system.with_coupling(lam))
        if model == "classical":
            result = service.classical()
        elif model == "gap":
            result = service.gap(config.solver.basis_size)
        else:
            result = service.meanfield(model)
        click.echo(json.dumps(result, sort_keys=True))


@cli.command()
@click.option("--b", type=float)
@click.option("--c", type=float)
@click.option("--couplings", help="Evaluate at these couplings")
@click.option("--curve", type=click.Path(exists=True, dir_okay=False), help="Calibrate on a sweep curve.dat")
@_guarded
def fitformula(b, c, couplings, curve):
    """Evaluate the closed-form omega_r(lambda), or calibrate (b, c) on a sweep curve."""
    if curve:
        columns, _ = read_columns(curve)
        mask = np.isfinite(columns["omega_r"])
        result = calibrate_fit_formula(list(zip(columns["lambda"][mask], columns["omega_r"][mask])))
        click.echo(json.dumps(result, indent=2, sort_keys=True))
        b, c = result["params"]["b"], result["params"]["c"]
    elif b is None or c is None:
        raise ConfigError("Give --curve, or both --b and --c")
    params = FitFormulaParams(b=b, c=c)
    for lam in parse_floats(couplings):
        click.echo(f"{lam:g} {eval_fit_formula(params, lam):.8f}")


@cli.command()
@click.option("--figure", "figure_id", type=click.Choice(FIGURES), required=True)
@click.option("--runs-dir", type=click.Path(file_okay=False), default=lambda: Config.OUTPUT_DIR)
@click.option("--output-dir", type=click.Path(file_okay=False), default="figures", show_default=True)
@_guarded
def emit(figure_id, runs_dir, output_dir):
    """Plot-ready column files for one figure from the stored runs."""
    paths = figure_emit(load_records(runs_dir), figure_id, output_dir, load_spectra(runs_dir))
    for path in paths:
        click.echo(path)


@cli.command()
@click.option("--host", default="0.0.0.0")
@click.option("--port", default=5000, type=int)
def serve(host, port):
    """Results API with swagger docs at /apidocs."""
    logging.info(f"Serving on {host}:{port}")
    create_app().run(host=host, port=port, debug=Config.DEBUG)


if __name__ == "__main__":
    cli()
