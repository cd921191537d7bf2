"""Run orchestration: single runs, coupling sweeps and their persisted outputs."""
import glob
import logging
import math
import os
from typing import Dict, List, Optional, Tuple

from models.excitation import SwitchOff
from models.report import ModeReport, ResonanceSpectrum, TwoModeFit
from models.run import ConvergenceCheck, RunConfig, RunRecord, SolverMethod, SolverSettings, SweepResult
from models.timeseries import UPOT, TimeSeries
from models.wavefunction import GridWavefunction, SeparatedWavefunction
from services.mode_analysis import fit_two_modes
from services.observables import asymptotic_energy
from services.simulation import Simulation
from services.workers import parallel_map
from utils.errors import SimulationError
from utils.storage import config_hash, read_summary, save_checkpoint, write_columns, write_summary, \
    write_timeseries

SERIES_FILE = "series.dat"
SUMMARY_FILE = "summary.json"
CURVE_FILE = "curve.dat"
SPECTRUM_FILE = "spectrum.json"
SPECTRUM_COLUMNS_FILE = "spectrum.dat"
CURVE_COLUMNS = ("lambda", "omega_r", "omega_R", "gamma", "weight_r", "weight_R", "residual_rms", "E_inf",
                 "merged", "converged", "completed")


def run_directory(config: RunConfig) -> str:
    return os.path.join(config.output_dir, config_hash(config.identity()))


def analyze(series: TimeSeries, config: RunConfig, mapped: bool = False
            ) -> Tuple[Optional[TwoModeFit], Optional[ModeReport], float]:
    """Two-mode fit of U_pot after the kick for method (I); E_inf for every protocol."""
    e_inf = asymptotic_energy(series)
    if not isinstance(config.protocol, SwitchOff):
        return None, None, e_inf
    fit = fit_two_modes(series.window(config.analysis_start), UPOT)
    system = config.system
    report = ModeReport(method="fit", coupling=system.coupling, symmetry=system.symmetry,
                        dimension=system.dimension, relative_frequency=fit.relative_frequency,
                        com_frequency=fit.com_frequency, relative_weight=abs(fit.relative_amplitude),
                        com_weight=abs(fit.com_amplitude), residual_rms=fit.residual_rms, merged=fit.merged,
                        bose_fermi_mapped=mapped)
    return fit, report, e_inf


def _describe(settings: SolverSettings) -> str:
    if settings.method is SolverMethod.GRID:
        return f"grid_points={settings.grid_points} time_step={settings.resolved_time_step:g}"
    return f"basis_size={settings.resolved_basis_size} time_step={settings.resolved_time_step:g}"


def _convergence(record: RunRecord) -> RunRecord:
    config = record.config
    refined = config.model_copy(update={"solver": config.solver.refined(), "check_convergence": False})
    logging.info(f"Convergence rerun of {record.config_hash} at {_describe(refined.solver)}")
    simulation = Simulation(refined)
    series, _ = simulation.run()
    fit, _, e_inf = analyze(series, refined, simulation.mapped)

    if fit is not None and record.fit is not None:
        delta = max(abs(fit.relative_frequency - record.fit.relative_frequency),
                    abs(fit.com_frequency - record.fit.com_frequency))
        check = ConvergenceCheck(setting=_describe(refined.solver), relative_frequency=fit.relative_frequency,
                                 com_frequency=fit.com_frequency, asymptotic_energy=e_inf, delta=delta)
    else:
        delta = abs(e_inf - record.asymptotic_energy)
        check = ConvergenceCheck(setting=_describe(refined.solver), asymptotic_energy=e_inf, delta=delta)

    converged = delta <= config.convergence_tolerance
    if not converged:
        logging.warning(f"Run {record.config_hash} changed by {delta:.2e} under refinement "
                        f"(tolerance {config.convergence_tolerance:g})")
    return record.model_copy(update={"convergence": [check], "converged": converged})


def _persist(record: RunRecord, series: Optional[TimeSeries]) -> RunRecord:
    directory = run_directory(record.config)
    update = {"summary_path": os.path.join(directory, SUMMARY_FILE)}
    if series is not None:
        update["series_path"] = os.path.join(directory, SERIES_FILE)
        write_timeseries(update["series_path"], series, record.config.model_dump(mode="json"))
    record = record.model_copy(update=update)
    write_summary(record.summary_path, record.summary())
    return record


def run_single(config: RunConfig, store=None) -> RunRecord:
    """Ground state, excitation, propagation, analysis, persistence.

    Failures do not raise: the record carries the stage, the message and the
    exit code. ``store`` is an optional run-record service to upsert into.
    """
    key = config_hash(config.identity())
    logging.info(f"Run {key}: lambda={config.system.coupling} {config.system.symmetry.value} "
                 f"d={config.system.dimension} {config.solver.method.value}/{config.solver.representation.value}")
    stage = "setup"
    series = None
    try:
        simulation = Simulation(config)
        stage = "ground_state"
        state, ground = simulation.ground_state()
        stage = "propagation"
        series = simulation.propagate(state)
        stage = "analysis"
        fit, report, e_inf = analyze(series, config, simulation.mapped)
        record = RunRecord(config_hash=key, config=config, ground_energy=ground, fit=fit, report=report,
                           asymptotic_energy=e_inf, bose_fermi_mapped=simulation.mapped)
        if config.check_convergence:
            stage = "convergence"
            record = _convergence(record)
    except (SimulationError, ValueError) as e:
        exit_code = getattr(e, "exit_code", 2)
        logging.error(f"Run {key} failed during {stage}: {e}")
        record = RunRecord(config_hash=key, config=config, status="failed", stage=stage, error=str(e),
                           exit_code=exit_code)

    try:
        record = _persist(record, series)
    except OSError as e:
        logging.error(f"Could not write outputs of run {key}: {e}")
        record = record.model_copy(update={"status": "failed", "stage": "persist", "error": str(e),
                                           "exit_code": 2})

    if store is not None:
        store.upsert_record(record)
    if record.report is not None:
        logging.info(f"Run {key} done: omega_r={record.report.relative_frequency:.6f} "
                     f"omega_R={record.report.com_frequency:.6f}")
    return record


def _sweep_point(payload: str) -> str:
    return run_single(RunConfig.model_validate_json(payload)).model_dump_json()


def curve_columns(records: List[RunRecord]) -> Dict[str, List[float]]:
    columns: Dict[str, List[float]] = {name: [] for name in CURVE_COLUMNS}
    for record in records:
        report = record.report
        nan = math.nan
        columns["lambda"].append(record.config.system.coupling)
        columns["omega_r"].append(report.relative_frequency if report else nan)
        columns["omega_R"].append(report.com_frequency if report else nan)
        columns["gamma"].append(report.frequency_ratio if report else nan)
        columns["weight_r"].append(report.relative_weight if report and report.relative_weight is not None else nan)
        columns["weight_R"].append(report.com_weight if report and report.com_weight is not None else nan)
        columns["residual_rms"].append(report.residual_rms if report and report.residual_rms is not None else nan)
        columns["E_inf"].append(record.asymptotic_energy if record.asymptotic_energy is not None else nan)
        columns["merged"].append(float(report.merged) if report else nan)
        columns["converged"].append(nan if record.converged is None else float(record.converged))
        columns["completed"].append(float(record.status == "completed"))
    return columns


def run_sweep(config: RunConfig, store=None) -> SweepResult:
    """One run per coupling through the worker pool; failed points stay in the curve as NaN rows."""
    couplings = config.couplings or [config.system.coupling]
    payloads = [config.for_point(coupling=lam).model_dump_json() for lam in couplings]
    records = [RunRecord.model_validate_json(raw)
               for raw in parallel_map(_sweep_point, payloads, config.workers)]
    if store is not None:
        for record in records:
            store.upsert_record(record)

    header = config.model_dump(mode="json", exclude={"output_dir", "workers", "label"})
    path = os.path.join(config.output_dir, f"sweep_{config_hash(header)}", CURVE_FILE)
    write_columns(path, curve_columns(records), header)

    result = SweepResult(records=records, curve_path=path)
    failed = [r.config.system.coupling for r in records if r.status != "completed"]
    if failed:
        logging.warning(f"Sweep is partial; failed couplings: {failed}")
    logging.info(f"Sweep of {len(records)} points written to {path}")
    return result


def compute_ground_state(config: RunConfig, checkpoint_dir: Optional[str] = None) -> Tuple[float, bool]:
    """Ground-state energy of the configured system; grid states are optionally checkpointed per frame."""
    simulation = Simulation(config)
    state, energy = simulation.ground_state()
    if checkpoint_dir:
        parts = [state.center_of_mass, state.relative] if isinstance(state, SeparatedWavefunction) else [state]
        for part in parts:
            if isinstance(part, GridWavefunction):
                path = os.path.join(checkpoint_dir, f"{part.frame.value}.npz")
                save_checkpoint(path, part)
                logging.info(f"Checkpoint written to {path}")
    return energy, simulation.mapped


def load_records(output_dir: str) -> List[RunRecord]:
    """Every run summary below ``output_dir``, ordered by system and coupling."""
    records = []
    for path in sorted(glob.glob(os.path.join(output_dir, "*", SUMMARY_FILE))):
        try:
            record = RunRecord.model_validate(read_summary(path))
        except (OSError, ValueError) as e:
            logging.warning(f"Skipping unreadable summary {path}: {e}")
            continue
        records.append(record.model_copy(update={"summary_path": path}))
    records.sort(key=lambda r: (r.config.system.dimension, r.config.system.symmetry.value,
                                r.config.system.softening, r.config.system.coupling, r.config_hash))
    return records


def persist_spectrum(spectrum: ResonanceSpectrum, config: RunConfig) -> str:
    """spectrum.json plus (omega_ext, E_inf) columns in a directory keyed by the scan configuration."""
    header = config.model_dump(mode="json", exclude={"output_dir", "workers", "label"})
    header["system"] = {**header["system"], "coupling": spectrum.coupling}
    directory = os.path.join(config.output_dir, f"scan_{config_hash(header)}")
    write_columns(os.path.join(directory, SPECTRUM_COLUMNS_FILE),
                  {"omega_ext": spectrum.frequencies, "E_inf": spectrum.energies}, header)
    path = os.path.join(directory, SPECTRUM_FILE)
    write_summary(path, spectrum.model_dump(mode="json"))
    logging.info(f"Spectrum at lambda={spectrum.coupling} written to {directory}")
    return path


def load_spectra(output_dir: str) -> List[ResonanceSpectrum]:
    spectra = []
    for path in sorted(glob.glob(os.path.join(output_dir, "scan_*", SPECTRUM_FILE))):
        try:
            spectra.append(ResonanceSpectrum.model_validate(read_summary(path)))
        except (OSError, ValueError) as e:
            logging.warning(f"Skipping unreadable spectrum {path}: {e}")
    spectra.sort(key=lambda s: (s.dimension, s.symmetry.value, s.coupling))
    return spectra
