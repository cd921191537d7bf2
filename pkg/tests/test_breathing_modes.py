"""Production-resolution checks of the two breathing modes from kick runs and the diagonalization oracle."""
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from models.run import RunConfig, SolverSettings
from models.system import Symmetry, SystemSpec
from models.timeseries import ETOT, UPOT
from services.fit_formula import fit_formula_calibrate, max_deviation
from services.oscillator_basis import set_matrix_cache, spectral_gap
from services.runner import run_single
from services.simulation import Simulation
from utils.storage import MatrixCache


@pytest.fixture(autouse=True)
def matrix_cache(tmp_path):
    set_matrix_cache(MatrixCache(str(tmp_path / "matrix_cache")))


@pytest.fixture
def kick_run(tmp_path):
    """Runs one kick experiment and returns the completed record"""

    def run(system, duration=200.0, **solver):
        solver.setdefault("method", "basis")
        if solver["method"] == "basis":
            solver.setdefault("basis_size", 200)
            solver.setdefault("time_step", 0.02)
        config = RunConfig(system=system, solver=SolverSettings(**solver), duration=duration,
                           sample_interval=0.05, output_dir=str(tmp_path / "runs"), workers=1)
        record = run_single(config)
        assert record.status == "completed", record.error
        return record

    return run


class TestSeparability:
    def test_pair_basis_matches_separated_basis(self, tmp_path):
        """Test that the CoM x relative product basis reproduces the separated run sample by sample"""
        system = SystemSpec(coupling=0.5, softening=1.0)
        series = {}
        for representation, size in (("pair", 400), ("separated", 20)):
            config = RunConfig(system=system,
                               solver=SolverSettings(method="basis", representation=representation, basis_size=size,
                                                     time_step=0.05),
                               duration=20.0, sample_interval=0.05, output_dir=str(tmp_path), workers=1)
            series[representation], _ = Simulation(config).run()
        for channel in (UPOT, ETOT):
            assert np.allclose(series["pair"].channel(channel), series["separated"].channel(channel), atol=1e-9)


@pytest.mark.slow
class TestTimeDomainFit:
    def test_unit_coupling_frequencies(self, kick_run):
        """Test omega_r = 1.901 +- 0.005 and omega_R = 2.000 +- 0.003 from the fit at lambda = 1"""
        system = SystemSpec(coupling=1.0)
        report = kick_run(system, duration=300.0).report
        assert report.relative_frequency == pytest.approx(1.901, abs=5e-3)
        assert report.com_frequency == pytest.approx(2.0, abs=3e-3)
        assert abs(report.relative_frequency - spectral_gap(system, 200)) < 1e-3

    @pytest.mark.parametrize("coupling", [0.5, 1.0, 2.0])
    def test_fit_matches_diagonalization(self, kick_run, coupling):
        """Test the fitted relative frequency against E2 - E0 within 1e-3"""
        system = SystemSpec(coupling=coupling)
        report = kick_run(system, duration=300.0).report
        assert report.relative_frequency == pytest.approx(spectral_gap(system, 200), abs=1e-3)

    def test_grid_agrees_with_basis(self, kick_run):
        """Test that both solvers give the same two frequencies at lambda = 1"""
        system = SystemSpec(coupling=1.0)
        grid = kick_run(system, duration=150.0, method="grid", grid_points=1200, time_step=2e-3).report
        basis = kick_run(system, duration=150.0).report
        assert grid.relative_frequency == pytest.approx(basis.relative_frequency, abs=1e-3)
        assert grid.com_frequency == pytest.approx(basis.com_frequency, abs=1e-3)

    def test_pair_grid_agrees_with_separated_grid(self, kick_run):
        """Test the two-particle grid against the Jacobi-separated grids for a softened pair"""
        system = SystemSpec(coupling=1.0, softening=1.0)
        pair = kick_run(system, duration=100.0, method="grid", representation="pair", grid_points=200,
                        time_step=0.01, imaginary_time_step=0.02)
        separated = kick_run(system, duration=100.0, method="grid", grid_points=800, time_step=0.01)
        # the pair grid is coarse, so agreement is limited by its spacing
        assert pair.ground_energy == pytest.approx(separated.ground_energy, abs=5e-3)
        assert pair.report.relative_frequency == pytest.approx(separated.report.relative_frequency, abs=5e-3)
        assert pair.report.com_frequency == pytest.approx(separated.report.com_frequency, abs=5e-3)


@pytest.mark.slow
class TestCenterOfMassUniversality:
    @pytest.mark.parametrize("dimension,symmetry,coupling", [
        (1, Symmetry.ANTISYMMETRIC, 1.0),
        (1, Symmetry.ANTISYMMETRIC, 10.0),
        (1, Symmetry.SYMMETRIC, 1.0),
        (1, Symmetry.SYMMETRIC, 10.0),
        (2, Symmetry.ANTISYMMETRIC, 1.0),
        (2, Symmetry.ANTISYMMETRIC, 10.0),
        (2, Symmetry.SYMMETRIC, 10.0),
    ])
    def test_com_frequency_is_two(self, kick_run, dimension, symmetry, coupling):
        """Test omega_R = 2 +- 0.003 independent of dimension, symmetry and coupling"""
        record = kick_run(SystemSpec(dimension=dimension, symmetry=symmetry, coupling=coupling))
        assert record.report.com_frequency == pytest.approx(2.0, abs=3e-3)
        assert record.report.bose_fermi_mapped == (dimension == 1 and symmetry is Symmetry.SYMMETRIC)

    def test_two_dimensional_bosons_on_grid(self, kick_run):
        """Test omega_R = 2 for the m = 0 sector at lambda = 1 on a radial grid"""
        system = SystemSpec(dimension=2, symmetry=Symmetry.SYMMETRIC, coupling=1.0)
        record = kick_run(system, duration=150.0, method="grid", grid_points=600, time_step=2e-3)
        assert record.report.com_frequency == pytest.approx(2.0, abs=3e-3)


@pytest.mark.slow
class TestRelativeFrequencyCurves:
    def test_two_dimensional_sectors_split(self):
        """Test that the 2D sectors bracket the 1D curve at lambda = 1 and differ by 3-7% of 2"""
        symmetric = spectral_gap(SystemSpec(dimension=2, symmetry=Symmetry.SYMMETRIC, coupling=1.0), 200)
        antisymmetric = spectral_gap(SystemSpec(dimension=2, coupling=1.0), 200)
        line = spectral_gap(SystemSpec(coupling=1.0), 200)
        assert symmetric < line < antisymmetric
        assert 0.03 < (antisymmetric - symmetric) / 2.0 < 0.07

    def test_softened_bosons_dip_below_fermions(self):
        """Test the local minimum of the kappa = 0.1 even-sector curve below the odd-sector curve"""
        couplings = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.3, 1.6, 2.0]
        bosons = np.array([spectral_gap(SystemSpec(coupling=lam, symmetry=Symmetry.SYMMETRIC, softening=0.1), 200)
                           for lam in couplings])
        fermions = np.array([spectral_gap(SystemSpec(coupling=lam), 200) for lam in couplings])
        minima = [k for k in range(1, len(couplings) - 1)
                  if bosons[k] < bosons[k - 1] and bosons[k] < bosons[k + 1]]
        assert minima
        k = minima[0]
        assert 0.2 <= couplings[k] <= 1.5
        assert bosons[k] < fermions[k]

    def test_fit_formula_follows_computed_curve(self):
        """Test the calibrated closed form within 0.01 of E2 - E0 over 0.1 <= lambda <= 30"""
        couplings = [0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0]
        points = [(lam, spectral_gap(SystemSpec(coupling=lam), 200)) for lam in couplings]
        params = fit_formula_calibrate(points)
        assert max_deviation(params, points) < 0.01

    def test_strong_coupling_approaches_classical_limit(self):
        """Test that the gap moves toward sqrt(3) from above as lambda grows"""
        gaps = [spectral_gap(SystemSpec(coupling=lam), 200) for lam in (10.0, 50.0, 200.0)]
        assert all(g > math.sqrt(3.0) for g in gaps)
        assert gaps[0] > gaps[1] > gaps[2]
