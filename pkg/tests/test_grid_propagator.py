import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from models.system import CoordinateFrame, Parity, Symmetry, SystemSpec
from models.wavefunction import Grid
from services.grid_propagator import GridPropagator, build_radial_problem, center_of_mass_problem, \
    default_grid, project_symmetry, relative_line_problem, step_imaginary_time, step_real_time
from services.tridiagonal import BatchedThomas, tridiagonal_apply
from utils.errors import ZeroNormError


@pytest.fixture
def ideal():
    """Non-interacting antisymmetric pair in 1D"""
    return SystemSpec(dimension=1, coupling=0.0)


@pytest.fixture
def coulomb():
    """Antisymmetric pair at unit coupling in 1D"""
    return SystemSpec(dimension=1, coupling=1.0)


class TestTridiagonal:
    def test_batched_thomas_matches_dense_solve(self):
        """Test the batched solver against numpy on random diagonally dominant lines"""
        rng = np.random.default_rng(7)
        n, batch = 12, 5
        diagonal = 4.0 + rng.random((n, batch))
        off = -0.7
        rhs = rng.random((n, batch)) + 1j * rng.random((n, batch))
        solution = BatchedThomas(diagonal, off).solve(rhs)
        for b in range(batch):
            dense = np.diag(diagonal[:, b]) + off * (np.eye(n, k=1) + np.eye(n, k=-1))
            assert np.allclose(dense @ solution[:, b], rhs[:, b], atol=1e-12)

    def test_apply_matches_dense_product(self):
        """Test the tridiagonal product with an array off-diagonal"""
        diagonal = np.array([1.0, 2.0, 3.0, 4.0])
        off = np.array([0.5, -1.0, 2.0])
        psi = np.array([1.0, -1.0, 0.5, 2.0])
        dense = np.diag(diagonal) + np.diag(off, 1) + np.diag(off, -1)
        assert np.allclose(tridiagonal_apply(diagonal, off, psi), dense @ psi)


class TestLineSpectra:
    def test_relative_ideal_levels(self, ideal):
        """Test n + 1/2 for the odd relative sector on a fine grid"""
        problem = relative_line_problem(ideal, Grid.symmetric(10.0, 800))
        energies, _ = problem.sector_eigenstates(2)
        assert energies == pytest.approx([1.5, 3.5], abs=1e-3)

    def test_even_sector_selected_for_symmetric_states(self):
        """Test that the symmetric sector starts at 1/2"""
        problem = relative_line_problem(SystemSpec(symmetry=Symmetry.SYMMETRIC), Grid.symmetric(10.0, 800))
        energies, _ = problem.sector_eigenstates(2)
        assert energies == pytest.approx([0.5, 2.5], abs=1e-3)

    def test_center_of_mass_ground_level(self):
        """Test the center-of-mass zero-point energy 1/2"""
        problem = center_of_mass_problem(Grid.symmetric(8.0, 600))
        energies, _ = problem.eigenstates(1)
        assert energies[0] == pytest.approx(0.5, abs=1e-3)

    def test_radial_ideal_levels(self):
        """Test 2n + |m| + 1 for the 2D relative problem at m = 1"""
        spec = SystemSpec(dimension=2, coupling=0.0)
        problem = build_radial_problem(spec, 1, Grid.radial_grid(12.0, 1200))
        energies, _ = problem.eigenstates(2)
        assert energies == pytest.approx([2.0, 4.0], abs=5e-3)

    def test_radial_sector_mismatch_rejected(self):
        """Test that m must match the exchange symmetry"""
        with pytest.raises(ValueError):
            build_radial_problem(SystemSpec(dimension=2, symmetry=Symmetry.ANTISYMMETRIC), 0)

    def test_eigenvectors_normalized(self, coulomb):
        """Test sum |u|^2 h = 1"""
        grid = Grid.symmetric(12.0, 500)
        _, vectors = relative_line_problem(coulomb, grid).sector_eigenstates(1)
        assert np.sum(vectors[:, 0] ** 2) * grid.spacing == pytest.approx(1.0, rel=1e-10)

    def test_folded_sectors_rebuild_full_spectrum(self, coulomb):
        """Test that the even and odd sector levels together are the unrestricted levels"""
        grid = Grid.symmetric(10.0, 200)
        odd, _ = relative_line_problem(coulomb, grid).sector_eigenstates(3)
        even, _ = relative_line_problem(coulomb.with_symmetry(Symmetry.SYMMETRIC), grid).sector_eigenstates(3)
        full, _ = relative_line_problem(coulomb, grid).eigenstates(6)
        assert np.sort(np.concatenate([odd, even])) == pytest.approx(full, abs=1e-9)

    def test_degenerate_sectors_at_strong_coupling(self):
        """Test that near-degenerate even and odd levels at lambda = 50 stay in their own sectors"""
        spec = SystemSpec(dimension=1, coupling=50.0)
        grid = default_grid(spec, CoordinateFrame.RELATIVE, 800)
        odd, vectors = relative_line_problem(spec, grid).sector_eigenstates(2)
        even, _ = relative_line_problem(spec.with_symmetry(Symmetry.SYMMETRIC), grid).sector_eigenstates(2)
        assert vectors.shape == (grid.points, 2)
        assert np.allclose(vectors[::-1, 0], -vectors[:, 0])
        assert np.sum(vectors[:, 0] ** 2) * grid.spacing == pytest.approx(1.0, rel=1e-10)
        assert odd[1] > odd[0]
        assert even[0] == pytest.approx(odd[0], abs=1e-6)

    def test_asymmetric_grid_rejected_for_sectors(self, coulomb):
        """Test ValueError when the grid is not mirror-symmetric"""
        problem = relative_line_problem(coulomb, Grid(lower=-4.0, upper=6.0, points=100))
        with pytest.raises(ValueError):
            problem.sector_eigenstates(1)


class TestImaginaryTime:
    def test_converges_to_lowest_sector_level(self, coulomb):
        """Test that relaxation reaches the discrete ground level of the odd sector"""
        grid = default_grid(coulomb, CoordinateFrame.RELATIVE, 400)
        propagator = GridPropagator(coulomb, grid, CoordinateFrame.RELATIVE)
        _, energy = propagator.ground_state(dtau=0.05, tolerance=1e-12)
        exact, _ = relative_line_problem(coulomb, grid).sector_eigenstates(1)
        assert energy == pytest.approx(exact[0], abs=1e-6)

    def test_module_step_lowers_energy(self, coulomb):
        """Test that each normalized imaginary-time step lowers the energy"""
        grid = default_grid(coulomb, CoordinateFrame.RELATIVE, 300)
        propagator = GridPropagator(coulomb, grid, CoordinateFrame.RELATIVE)
        psi = propagator.initial_state()
        energies = [propagator.energy(psi)]
        for _ in range(5):
            psi = step_imaginary_time(psi, coulomb, 0.05)
            energies.append(propagator.energy(psi))
        assert psi.norm() == pytest.approx(1.0, abs=1e-12)
        assert all(b < a for a, b in zip(energies, energies[1:]))

    def test_pair_ground_state_splits(self, ideal):
        """Test that the two-particle grid finds E_CoM + E_rel = 2 for ideal fermions"""
        grid = default_grid(ideal, CoordinateFrame.TWO_PARTICLE, 96)
        propagator = GridPropagator(ideal, grid, CoordinateFrame.TWO_PARTICLE)
        psi, energy = propagator.ground_state(dtau=0.05, tolerance=1e-9)
        assert energy == pytest.approx(2.0, abs=2e-2)
        assert propagator.parity_defect(psi) < 1e-10


class TestRealTime:
    def test_norm_and_energy_conserved_in_static_trap(self, coulomb):
        """Test unitarity and energy conservation of Crank-Nicolson"""
        grid = default_grid(coulomb, CoordinateFrame.RELATIVE, 300)
        propagator = GridPropagator(coulomb, grid, CoordinateFrame.RELATIVE)
        psi = propagator.initial_state()
        e0 = propagator.energy(psi)
        for _ in range(200):
            psi = propagator.step_real_time(psi, 1.0, 0.01)
        assert psi.norm() == pytest.approx(1.0, abs=1e-10)
        assert propagator.energy(psi) == pytest.approx(e0, abs=1e-9)

    def test_pair_exchange_symmetry_preserved(self, coulomb):
        """Test that pair steps keep an antisymmetric state antisymmetric"""
        grid = default_grid(coulomb, CoordinateFrame.TWO_PARTICLE, 64)
        propagator = GridPropagator(coulomb, grid, CoordinateFrame.TWO_PARTICLE)
        psi = propagator.initial_state()
        for step in range(50):
            psi = step_real_time(psi, coulomb, 0.0 if step < 5 else 1.0, 0.01)
        assert propagator.parity_defect(psi) < 1e-10
        assert psi.norm() == pytest.approx(1.0, abs=1e-10)

    def test_second_order_in_time_step(self, coulomb):
        """Test that halving dt cuts the Crank-Nicolson error by four"""
        grid = Grid.symmetric(10.0, 300)
        problem = relative_line_problem(coulomb, grid)
        x = grid.coordinates
        psi0 = (x * np.exp(-0.5 * x * x)).astype(complex)
        psi0 /= np.sqrt(np.sum(np.abs(psi0) ** 2) * grid.spacing)
        energies, vectors = problem.eigenstates(grid.points)
        vectors = vectors * np.sqrt(grid.spacing)
        exact = vectors @ (np.exp(-1j * energies * 1.0) * (vectors.T @ psi0))

        errors = []
        for dt in (0.02, 0.01, 0.005):
            psi = psi0
            for _ in range(int(round(1.0 / dt))):
                psi = problem.step(psi, 0.5j * dt, 1.0)
            errors.append(np.sqrt(np.sum(np.abs(psi - exact) ** 2) * grid.spacing))
        assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.1)
        assert errors[1] / errors[2] == pytest.approx(4.0, rel=0.1)

    def test_pair_norm_conserved_after_kick(self, coulomb):
        """Test that the pair step stays unitary through a kick and a few hundred steps"""
        grid = default_grid(coulomb, CoordinateFrame.TWO_PARTICLE, 64)
        propagator = GridPropagator(coulomb, grid, CoordinateFrame.TWO_PARTICLE)
        psi = propagator.initial_state()
        for step in range(300):
            psi = propagator.step_real_time(psi, 0.0 if step < 10 else 1.0, 0.01)
        assert abs(psi.norm() - 1.0) < 1e-9

    @pytest.mark.slow
    def test_pair_norm_drift_at_coarse_step(self, coulomb):
        """Test the norm after 2000 steps of dt = 5e-3 on a 200 x 200 pair grid"""
        grid = default_grid(coulomb, CoordinateFrame.TWO_PARTICLE, 200)
        propagator = GridPropagator(coulomb, grid, CoordinateFrame.TWO_PARTICLE)
        psi = propagator.initial_state()
        for step in range(2000):
            psi = propagator.step_real_time(psi, 0.0 if step < 20 else 1.0, 5e-3)
        assert abs(psi.norm() - 1.0) < 1e-8
        assert propagator.parity_defect(psi) < 1e-12

    def test_negative_time_step_rejected(self, coulomb):
        """Test that real-time steps need dt > 0"""
        grid = default_grid(coulomb, CoordinateFrame.RELATIVE, 100)
        propagator = GridPropagator(coulomb, grid, CoordinateFrame.RELATIVE)
        with pytest.raises(ValueError):
            propagator.step_real_time(propagator.initial_state(), 1.0, -0.01)


class TestSymmetryProjection:
    def test_projection_of_symmetric_state_to_antisymmetric_fails(self, ideal):
        """Test ZeroNormError when the target sector is empty"""
        grid = Grid.symmetric(6.0, 40)
        x = grid.coordinates
        symmetric = np.exp(-(x[:, None] ** 2 + x[None, :] ** 2))
        propagator = GridPropagator(ideal.with_symmetry(Symmetry.SYMMETRIC), grid, CoordinateFrame.TWO_PARTICLE)
        psi = propagator.wrap(propagator.normalized(symmetric))
        with pytest.raises(ZeroNormError):
            project_symmetry(psi, Symmetry.ANTISYMMETRIC)

    def test_projection_sets_parity(self, ideal):
        """Test that a product state projects onto a normalized antisymmetric state"""
        grid = Grid.symmetric(6.0, 40)
        x = grid.coordinates
        product = np.exp(-(x[:, None] - 1.0) ** 2 - (x[None, :] + 1.0) ** 2)
        propagator = GridPropagator(ideal, grid, CoordinateFrame.TWO_PARTICLE)
        projected = project_symmetry(propagator.wrap(propagator.normalized(product)), Symmetry.ANTISYMMETRIC)
        assert projected.parity is Parity.ODD
        assert projected.norm() == pytest.approx(1.0)
        assert np.allclose(projected.amplitudes, -projected.amplitudes.T)

    def test_pair_grid_unavailable_in_2d(self):
        """Test that two-particle grids are 1D only"""
        with pytest.raises(ValueError):
            default_grid(SystemSpec(dimension=2), CoordinateFrame.TWO_PARTICLE)
