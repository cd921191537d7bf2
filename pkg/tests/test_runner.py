import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import services.runner as runner
from models.report import ResonancePeak, ResonanceSpectrum
from models.run import RunConfig, SolverSettings
from models.system import Symmetry, SystemSpec
from services.figures import figure_emit
from services.oscillator_basis import set_matrix_cache
from services.runner import compute_ground_state, load_records, load_spectra, persist_spectrum, run_single, \
    run_sweep
from utils.errors import MissingRunsError, NumericalFailure
from utils.storage import MatrixCache, read_columns


@pytest.fixture(autouse=True)
def matrix_cache(tmp_path):
    set_matrix_cache(MatrixCache(str(tmp_path / "matrix_cache")))


@pytest.fixture
def basis_config(tmp_path):
    """Short kick run of the ideal fermion pair in a small basis"""
    return RunConfig(system=SystemSpec(coupling=0.0),
                     solver=SolverSettings(method="basis", basis_size=20, time_step=0.05),
                     duration=30.0, sample_interval=0.05, output_dir=str(tmp_path / "runs"), workers=1)


class BrokenSimulation:
    def __init__(self, config):
        self.mapped = False

    def ground_state(self):
        raise NumericalFailure("non-finite amplitudes")


class TestRunSingle:
    def test_ideal_kick_run(self, basis_config):
        """Test the merged breathing line at 2 and the stored outputs"""
        record = run_single(basis_config)
        assert record.status == "completed"
        assert record.ground_energy == pytest.approx(2.0)
        assert record.report.merged
        assert record.report.relative_frequency == pytest.approx(2.0, abs=1e-3)
        assert os.path.exists(record.series_path)
        assert os.path.exists(record.summary_path)

    def test_identical_configs_give_identical_summaries(self, basis_config):
        """Test that rerunning a configuration rewrites the same bytes"""
        first = run_single(basis_config)
        with open(first.summary_path, "rb") as handle:
            content = handle.read()
        second = run_single(basis_config)
        assert first.config_hash == second.config_hash
        with open(second.summary_path, "rb") as handle:
            assert handle.read() == content

    def test_failure_is_recorded(self, basis_config, monkeypatch):
        """Test that a solver failure ends up in the record instead of raising"""
        monkeypatch.setattr(runner, "Simulation", BrokenSimulation)
        record = run_single(basis_config)
        assert record.status == "failed"
        assert record.stage == "ground_state"
        assert record.exit_code == 2
        assert "non-finite" in record.error
        assert os.path.exists(record.summary_path)

    def test_convergence_check(self, basis_config):
        """Test the refined rerun at zero coupling"""
        record = run_single(basis_config.model_copy(update={"check_convergence": True}))
        assert record.converged
        assert record.convergence[0].setting.startswith("basis_size=70")

    def test_records_reload(self, basis_config):
        """Test that stored summaries load back as records"""
        record = run_single(basis_config)
        loaded = load_records(basis_config.output_dir)
        assert [r.config_hash for r in loaded] == [record.config_hash]
        assert loaded[0].report.relative_frequency == pytest.approx(record.report.relative_frequency)


class TestSweep:
    def test_curve_independent_of_worker_count(self, basis_config, tmp_path):
        """Test that serial and pooled sweeps write the same curve"""
        contents = []
        for workers in (1, 2):
            config = basis_config.model_copy(update={"couplings": [0.0, 0.5], "workers": workers,
                                                     "system": SystemSpec(softening=1.0),
                                                     "output_dir": str(tmp_path / f"w{workers}")})
            result = run_sweep(config)
            assert not result.partial
            assert result.exit_code == 0
            assert [r.config.system.coupling for r in result.records] == [0.0, 0.5]
            with open(result.curve_path, "rb") as handle:
                contents.append(handle.read())
        assert contents[0] == contents[1]

    def test_partial_sweep(self, basis_config, monkeypatch):
        """Test that a sweep with no finished point reports the failure exit code"""
        monkeypatch.setattr(runner, "Simulation", BrokenSimulation)
        result = run_sweep(basis_config.model_copy(update={"couplings": [0.0, 1.0]}))
        assert result.partial
        assert result.exit_code == 2
        columns, _ = read_columns(result.curve_path)
        assert np.all(np.isnan(columns["omega_r"]))
        assert list(columns["completed"]) == [0.0, 0.0]


class TestGroundState:
    def test_grid_ground_state_with_checkpoints(self, tmp_path):
        """Test E0 = 2 of the ideal pair on grids and the per-frame checkpoints"""
        config = RunConfig(system=SystemSpec(coupling=0.0), solver=SolverSettings(grid_points=300),
                           output_dir=str(tmp_path))
        energy, mapped = compute_ground_state(config, str(tmp_path / "checkpoints"))
        assert energy == pytest.approx(2.0, abs=1e-2)
        assert not mapped
        assert sorted(os.listdir(tmp_path / "checkpoints")) == ["center_of_mass.npz", "relative.npz"]

    def test_bosons_are_mapped(self, tmp_path):
        """Test that bare 1D bosons are computed through the fermionic sector"""
        config = RunConfig(system=SystemSpec(coupling=1.0, symmetry=Symmetry.SYMMETRIC),
                           solver=SolverSettings(method="basis", basis_size=30), output_dir=str(tmp_path))
        _, mapped = compute_ground_state(config)
        assert mapped


class TestSpectra:
    def test_spectrum_round_trip(self, basis_config):
        """Test that persisted scans load back"""
        spectrum = ResonanceSpectrum(coupling=1.0, symmetry=Symmetry.ANTISYMMETRIC, dimension=1,
                                     frequencies=[1.9, 2.0, 2.1], energies=[2.0, 2.1, 2.0],
                                     peaks=[ResonancePeak(center=2.0, height=0.1, area=0.01, width=0.1)])
        path = persist_spectrum(spectrum, basis_config)
        assert os.path.basename(path) == "spectrum.json"
        loaded = load_spectra(basis_config.output_dir)
        assert len(loaded) == 1
        assert loaded[0].peaks[0].center == 2.0


class TestFigures:
    def test_missing_runs_named(self, tmp_path):
        """Test MissingRunsError with the required runs"""
        with pytest.raises(MissingRunsError) as error:
            figure_emit([], "fig1", str(tmp_path))
        assert error.value.exit_code == 1
        assert error.value.required

    def test_unknown_figure(self, tmp_path):
        """Test ValueError for an unknown figure id"""
        with pytest.raises(ValueError):
            figure_emit([], "fig9", str(tmp_path))

    def test_fig1_and_fig3_from_kick_run(self, basis_config, tmp_path):
        """Test the column layouts written from one stored run"""
        run_single(basis_config)
        records = load_records(basis_config.output_dir)
        out = str(tmp_path / "figures")

        (fig1,) = figure_emit(records, "fig1", out)
        columns, header = read_columns(fig1)
        assert list(columns) == ["t", "dU_pot", "dabs_x", "fit_dU_pot"]
        assert columns["dU_pot"][0] == 0.0
        assert header["figure"] == "fig1"

        paths = figure_emit(records, "fig3", out)
        assert os.path.basename(paths[0]) == "fig3_antisymmetric.dat"
        columns, _ = read_columns(paths[0])
        assert list(columns) == ["lambda", "omega_r", "omega_R", "weight_r", "weight_R", "area_r", "area_R"]
        assert np.isnan(columns["area_r"][0])
