"""Crank-Nicolson propagation of the two-particle problem and its reduced forms on grids.

Three geometries share one interface:
  * a Cartesian line (1D relative or center-of-mass coordinate),
  * a staggered radial line (2D relative or center-of-mass motion at fixed m),
  * the two-particle 1D grid over (x1, x2), advanced by Strang-split line sweeps.
The trap enters every Hamiltonian through a multiplier so excitation protocols
only change one number per step.
"""
import logging
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal, solve_banded

from config import Config
from models.system import CoordinateFrame, Parity, Symmetry, SystemSpec
from models.wavefunction import Grid, GridWavefunction
from services.potentials import classical_separation, interaction, relative_box_half_width
from services.tridiagonal import BatchedThomas, tridiagonal_apply
from utils.errors import ConvergenceError, NumericalFailure, ZeroNormError

CENTER_OF_MASS_HALF_WIDTH = 8.0
PARITY_CHECK_INTERVAL = 10
FACTOR_CACHE_SIZE = 4


class LineProblem:
    """H = -c d^2/dx^2 + f k x^2 + w(x) on a single grid, stored as a symmetric tridiagonal.

    On radial grids the kinetic term is the flux form of -(c/r) d/dr (r d/dr)
    after the similarity transform u = sqrt(r) phi; in the continuum this is
    -c u'' - c u / (4 r^2), so together with c m^2 / r^2 the effective
    centrifugal term is c (m^2 - 1/4) / r^2 and u(0) = 0 holds by construction.
    """

    def __init__(self, grid: Grid, kinetic: float, harmonic: float, static_potential: np.ndarray,
                 frame: CoordinateFrame, parity: Parity = Parity.NONE,
                 angular_momentum: Optional[int] = None):
        self.grid = grid
        self.frame = frame
        self.parity = parity
        self.angular_momentum = angular_momentum
        self.kinetic = kinetic
        self.harmonic = harmonic

        h = grid.spacing
        x = grid.coordinates
        n = grid.points
        self.x = x

        if grid.radial:
            m = angular_momentum or 0
            r_outer = np.arange(1, n + 1) * h
            r_inner = r_outer - h
            self.kinetic_diagonal = kinetic * (r_outer + r_inner) / (x * h * h) + kinetic * m * m / (x * x)
            self.off_diagonal = -kinetic * r_outer[:-1] / (np.sqrt(x[:-1] * x[1:]) * h * h)
        else:
            self.kinetic_diagonal = np.full(n, 2.0 * kinetic / (h * h))
            self.off_diagonal = np.full(n - 1, -kinetic / (h * h))

        self.trap = harmonic * x * x
        self.static = np.asarray(static_potential, dtype=float)
        self._banded_key = None
        self._banded = None

    @property
    def volume_element(self) -> float:
        return self.grid.spacing

    def diagonal(self, trap_factor: float) -> np.ndarray:
        return self.kinetic_diagonal + trap_factor * self.trap + self.static

    def apply(self, psi: np.ndarray, trap_factor: float = 1.0) -> np.ndarray:
        return tridiagonal_apply(self.diagonal(trap_factor), self.off_diagonal, psi)

    def _lhs(self, scale, trap_factor: float) -> np.ndarray:
        key = (scale, trap_factor)
        if key != self._banded_key:
            n = self.grid.points
            ab = np.zeros((3, n), dtype=np.result_type(scale, float))
            ab[0, 1:] = scale * self.off_diagonal
            ab[1] = 1.0 + scale * self.diagonal(trap_factor)
            ab[2, :-1] = scale * self.off_diagonal
            self._banded_key = key
            self._banded = ab
        return self._banded

    def step(self, psi: np.ndarray, scale, trap_factor: float) -> np.ndarray:
        """Solve (1 + s H) psi' = (1 - s H) psi; s = i dt/2 in real time, dtau/2 in imaginary time."""
        rhs = psi - scale * self.apply(psi, trap_factor)
        return solve_banded((1, 1), self._lhs(scale, trap_factor), rhs, check_finite=False)

    def energy(self, psi: np.ndarray, trap_factor: float = 1.0) -> float:
        weight = np.vdot(psi, psi).real
        return float(np.vdot(psi, self.apply(psi, trap_factor)).real / weight)

    def eigenstates(self, count: int, trap_factor: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
        """Lowest ``count`` eigenpairs; columns are normalized to sum |u|^2 h = 1."""
        count = min(count, self.grid.points)
        energies, vectors = eigh_tridiagonal(self.diagonal(trap_factor), self.off_diagonal,
                                             select="i", select_range=(0, count - 1))
        return energies, vectors / np.sqrt(self.volume_element)

    def sector_eigenstates(self, count: int, trap_factor: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
        """Lowest ``count`` eigenpairs inside this problem's parity sector.

        A mirror-symmetric Cartesian grid is folded onto x > 0 with the mirror
        condition at the origin, so degenerate even/odd pairs cannot mix.
        """
        if self.parity is Parity.NONE or self.grid.radial:
            return self.eigenstates(count, trap_factor)
        n = self.grid.points
        if self.grid.lower != -self.grid.upper or n % 2:
            raise ValueError("Parity sectors need a grid symmetric about x = 0")
        half = n // 2
        sign = 1.0 if self.parity is Parity.EVEN else -1.0
        diagonal = self.diagonal(trap_factor)[half:].copy()
        # the neighbour across the origin is the mirror node x_{half-1} = -x_half
        diagonal[0] += sign * self.off_diagonal[half - 1]
        count = min(count, half)
        energies, vectors = eigh_tridiagonal(diagonal, self.off_diagonal[half:],
                                             select="i", select_range=(0, count - 1))
        full = np.concatenate([sign * vectors[::-1], vectors])
        return energies, full / np.sqrt(2.0 * self.volume_element)

    def parity_defect(self, psi: np.ndarray) -> float:
        if self.parity is Parity.NONE or self.grid.radial:
            return 0.0
        sign = 1.0 if self.parity is Parity.EVEN else -1.0
        return float(np.linalg.norm(psi - sign * psi[::-1]) / np.linalg.norm(psi))

    def enforce_parity(self, psi: np.ndarray) -> np.ndarray:
        if self.parity is Parity.NONE or self.grid.radial:
            return psi
        sign = 1.0 if self.parity is Parity.EVEN else -1.0
        return 0.5 * (psi + sign * psi[::-1])


class PairProblem:
    """Two particles on a shared 1D grid; amplitudes indexed [i, j] = psi(x_i, x_j).

    The Hamiltonian is split as H = A + B with A acting along x1, B along x2,
    each carrying half of the interaction. Exchange maps A onto B, so one set of
    line factorizations serves both sweep directions. Coincident nodes of a bare
    interaction carry the value at separation h/2.
    """

    frame = CoordinateFrame.TWO_PARTICLE

    def __init__(self, spec: SystemSpec, grid: Grid):
        if spec.dimension != 1:
            raise ValueError("Two-particle grids are only supported in one dimension")
        self.spec = spec
        self.grid = grid
        self.parity = Parity.of(spec.symmetry)

        h = grid.spacing
        x = grid.coordinates
        self.x = x
        self.kinetic_diagonal = 1.0 / (h * h)
        self.off_diagonal = -0.5 / (h * h)
        self.trap = 0.5 * x * x

        separation = np.abs(x[:, None] - x[None, :])
        if spec.is_bare:
            separation = np.where(separation == 0.0, 0.5 * h, separation)
        self.half_interaction = 0.5 * interaction(spec, separation)
        self._factors = {}

    @property
    def volume_element(self) -> float:
        return self.grid.spacing ** 2

    def line_diagonal(self, trap_factor: float) -> np.ndarray:
        """Diagonal of A: column j is the line operator along x1 at fixed x2 = x_j."""
        return (self.kinetic_diagonal + trap_factor * self.trap)[:, None] + self.half_interaction

    def _apply_a(self, psi: np.ndarray, trap_factor: float) -> np.ndarray:
        return tridiagonal_apply(self.line_diagonal(trap_factor), self.off_diagonal, psi)

    def apply(self, psi: np.ndarray, trap_factor: float = 1.0) -> np.ndarray:
        swapped = np.ascontiguousarray(psi.T)
        return self._apply_a(psi, trap_factor) + self._apply_a(swapped, trap_factor).T

    def _cayley_a(self, psi: np.ndarray, scale, trap_factor: float) -> np.ndarray:
        key = (scale, trap_factor)
        factor = self._factors.get(key)
        if factor is None:
            if len(self._factors) >= FACTOR_CACHE_SIZE:
                self._factors.clear()
            factor = BatchedThomas(1.0 + scale * self.line_diagonal(trap_factor), scale * self.off_diagonal)
            self._factors[key] = factor
        return factor.solve(psi - scale * self._apply_a(psi, trap_factor))

    def _cayley_b(self, psi: np.ndarray, scale, trap_factor: float) -> np.ndarray:
        return self._cayley_a(np.ascontiguousarray(psi.T), scale, trap_factor).T

    def step(self, psi: np.ndarray, scale, trap_factor: float) -> np.ndarray:
        """One Strang step A(dt/2) B(dt) A(dt/2) built from Crank-Nicolson factors.

        Each factor is a Cayley transform, so the step is unitary in real time.
        Projecting onto the exchange sector removes the O(dt^3) asymmetry
        between the two sweep directions.
        """
        half = self._cayley_a(psi, 0.5 * scale, trap_factor)
        full = np.ascontiguousarray(self._cayley_b(half, scale, trap_factor))
        return self.enforce_parity(self._cayley_a(full, 0.5 * scale, trap_factor))

    def energy(self, psi: np.ndarray, trap_factor: float = 1.0) -> float:
        weight = np.vdot(psi, psi).real
        return float(np.vdot(psi, self.apply(psi, trap_factor)).real / weight)

    def parity_defect(self, psi: np.ndarray) -> float:
        sign = 1.0 if self.parity is Parity.EVEN else -1.0
        return float(np.linalg.norm(psi - sign * psi.T) / np.linalg.norm(psi))

    def enforce_parity(self, psi: np.ndarray) -> np.ndarray:
        sign = 1.0 if self.parity is Parity.EVEN else -1.0
        return 0.5 * (psi + sign * psi.T)


def relative_line_problem(spec: SystemSpec, grid: Grid) -> LineProblem:
    return LineProblem(grid, kinetic=1.0, harmonic=0.25, static_potential=interaction(spec, grid.coordinates),
                       frame=CoordinateFrame.RELATIVE, parity=Parity.of(spec.symmetry))


def center_of_mass_problem(grid: Grid) -> LineProblem:
    return LineProblem(grid, kinetic=0.25, harmonic=1.0, static_potential=np.zeros(grid.points),
                       frame=CoordinateFrame.CENTER_OF_MASS,
                       angular_momentum=0 if grid.radial else None)


def build_radial_problem(spec: SystemSpec, m: int, grid: Optional[Grid] = None) -> LineProblem:
    """Radial form of the 2D relative problem at angular momentum m, for u(r) = sqrt(r) phi(r)."""
    if spec.dimension != 2:
        raise ValueError("Radial reduction requires a two-dimensional system")
    if m < 0:
        raise ValueError("Angular momentum must be non-negative")
    # exchange r -> -r is a rotation by pi, which multiplies the state by (-1)^m
    expected = Symmetry.SYMMETRIC if m % 2 == 0 else Symmetry.ANTISYMMETRIC
    if spec.symmetry is not expected:
        raise ValueError(f"Angular momentum m={m} belongs to the {expected.value} sector, "
                         f"not {spec.symmetry.value}")
    if grid is None:
        grid = default_grid(spec, CoordinateFrame.RELATIVE)
    return LineProblem(grid, kinetic=1.0, harmonic=0.25, static_potential=interaction(spec, grid.coordinates),
                       frame=CoordinateFrame.RELATIVE, parity=Parity.of(spec.symmetry), angular_momentum=m)


def lowest_angular_momentum(symmetry: Symmetry) -> int:
    return 0 if symmetry is Symmetry.SYMMETRIC else 1


def default_grid(spec: SystemSpec, frame: CoordinateFrame, points: Optional[int] = None) -> Grid:
    points = points or Config.GRID_POINTS
    if frame is CoordinateFrame.CENTER_OF_MASS:
        half_width = CENTER_OF_MASS_HALF_WIDTH
    elif frame is CoordinateFrame.RELATIVE:
        half_width = relative_box_half_width(spec)
    else:
        half_width = 0.5 * relative_box_half_width(spec) + 4.0
    if spec.dimension == 2:
        if frame is CoordinateFrame.TWO_PARTICLE:
            raise ValueError("Two-particle grids are only supported in one dimension")
        return Grid.radial_grid(half_width, points)
    return Grid.symmetric(half_width, points)


class GridPropagator:
    """Real- and imaginary-time stepping for one (system, grid, frame) combination."""

    def __init__(self, spec: SystemSpec, grid: Grid, frame: CoordinateFrame,
                 angular_momentum: Optional[int] = None):
        self.spec = spec
        self.grid = grid
        self.frame = frame

        if frame is CoordinateFrame.TWO_PARTICLE:
            self.problem = PairProblem(spec, grid)
            self.angular_momentum = None
        elif frame is CoordinateFrame.RELATIVE:
            if spec.dimension == 2:
                m = lowest_angular_momentum(spec.symmetry) if angular_momentum is None else angular_momentum
                self.problem = build_radial_problem(spec, m, grid)
                self.angular_momentum = m
            else:
                self.problem = relative_line_problem(spec, grid)
                self.angular_momentum = None
        else:
            self.problem = center_of_mass_problem(grid)
            self.angular_momentum = self.problem.angular_momentum

        if frame is not CoordinateFrame.CENTER_OF_MASS and spec.needs_bose_fermi_mapping:
            logging.warning("Even sector with a bare 1D interaction on a grid: the result depends "
                            "on the grid spacing; use the Bose-Fermi mapping instead")
        self._cfl_warned = False

    @property
    def parity(self) -> Parity:
        return self.problem.parity

    def wrap(self, amplitudes: np.ndarray) -> GridWavefunction:
        return GridWavefunction(grid=self.grid, amplitudes=amplitudes, frame=self.frame,
                                parity=self.parity, angular_momentum=self.angular_momentum)

    def normalized(self, amplitudes: np.ndarray) -> np.ndarray:
        norm = np.sqrt(np.sum(np.abs(amplitudes) ** 2) * self.problem.volume_element)
        if not np.isfinite(norm) or norm == 0.0:
            raise ZeroNormError("Wavefunction has zero norm")
        return amplitudes / norm

    def _check_time_step(self, dt: float):
        if dt <= 0.0:
            raise ValueError("Time step must be positive")
        if not self._cfl_warned and dt > self.grid.spacing ** 2:
            logging.warning(f"Time step {dt} exceeds spacing^2 = {self.grid.spacing ** 2:.3e}; "
                            f"high-momentum components will be phase-inaccurate")
            self._cfl_warned = True

    def step_real_time(self, psi: GridWavefunction, trap_factor: float, dt: float) -> GridWavefunction:
        self._check_time_step(dt)
        if trap_factor < 0.0:
            raise ValueError("Trap factor must be non-negative")
        try:
            amplitudes = self.problem.step(psi.amplitudes.astype(complex, copy=False), 0.5j * dt, trap_factor)
        except (LinAlgError, ValueError, FloatingPointError) as e:
            raise NumericalFailure(f"Crank-Nicolson solve failed: {e}") from e
        return psi.with_amplitudes(amplitudes)

    def step_imaginary_time(self, psi: GridWavefunction, dtau: float) -> GridWavefunction:
        if dtau <= 0.0:
            raise ValueError("Imaginary time step must be positive")
        try:
            amplitudes = self.problem.step(psi.amplitudes, 0.5 * dtau, 1.0)
        except (LinAlgError, ValueError, FloatingPointError) as e:
            raise NumericalFailure(f"Imaginary-time solve failed: {e}") from e
        return psi.with_amplitudes(self.normalized(amplitudes))

    def energy(self, psi: GridWavefunction, trap_factor: float = 1.0) -> float:
        return self.problem.energy(psi.amplitudes, trap_factor)

    def parity_defect(self, psi: GridWavefunction) -> float:
        return self.problem.parity_defect(psi.amplitudes)

    def initial_state(self) -> GridWavefunction:
        """Ideal-gas state of the sector, displaced to the classical separation when lambda > 0."""
        x = self.grid.coordinates
        r0 = classical_separation(self.spec)
        odd = self.parity is Parity.ODD

        if self.frame is CoordinateFrame.TWO_PARTICLE:
            R = 0.5 * (x[:, None] + x[None, :])
            r = x[:, None] - x[None, :]
            amplitudes = np.exp(-R * R) * _relative_profile(r, r0, odd)
        elif self.frame is CoordinateFrame.RELATIVE:
            if self.grid.radial:
                amplitudes = x ** (self.angular_momentum + 0.5) * np.exp(-0.25 * (x - r0) ** 2)
            else:
                amplitudes = _relative_profile(x, r0, odd)
        else:
            amplitudes = np.exp(-x * x)
            if self.grid.radial:
                amplitudes = amplitudes * np.sqrt(x)
        return self.wrap(self.normalized(amplitudes.astype(float)))

    def ground_state(self, dtau: Optional[float] = None, tolerance: Optional[float] = None,
                     max_steps: Optional[int] = None,
                     initial: Optional[GridWavefunction] = None) -> Tuple[GridWavefunction, float]:
        """Imaginary-time relaxation to the lowest state of the maintained sector."""
        dtau = dtau or Config.IMAGINARY_TIME_STEP
        tolerance = tolerance or Config.IMAGINARY_TIME_TOLERANCE
        max_steps = max_steps or Config.IMAGINARY_TIME_MAX_STEPS

        psi = initial if initial is not None else self.initial_state()
        psi = psi.with_amplitudes(self.normalized(psi.amplitudes.real.astype(float)))
        energy = self.energy(psi)
        for step in range(1, max_steps + 1):
            psi = self.step_imaginary_time(psi, dtau)
            if step % PARITY_CHECK_INTERVAL:
                continue
            # round-off in the other sector would otherwise grow when that sector lies lower
            psi = psi.with_amplitudes(self.normalized(self.problem.enforce_parity(psi.amplitudes)))
            new_energy = self.energy(psi)
            if abs(new_energy - energy) < tolerance:
                logging.info(f"Imaginary time converged after {step} steps: E = {new_energy:.10f}")
                return psi, new_energy
            energy = new_energy
        raise ConvergenceError(f"Imaginary time did not converge within {max_steps} steps "
                               f"(last energy {energy:.10f})")


def _relative_profile(r: np.ndarray, r0: float, odd: bool) -> np.ndarray:
    profile = np.exp(-0.25 * (np.abs(r) - r0) ** 2)
    return r * profile if odd else profile


@lru_cache(maxsize=16)
def propagator_for(spec: SystemSpec, grid: Grid, frame: CoordinateFrame,
                   angular_momentum: Optional[int] = None) -> GridPropagator:
    return GridPropagator(spec, grid, frame, angular_momentum)


def _propagator(psi: GridWavefunction, spec: SystemSpec) -> GridPropagator:
    return propagator_for(spec, psi.grid, psi.frame, psi.angular_momentum)


def step_real_time(psi: GridWavefunction, spec: SystemSpec, trap_factor: float, dt: float) -> GridWavefunction:
    return _propagator(psi, spec).step_real_time(psi, trap_factor, dt)


def step_imaginary_time(psi: GridWavefunction, spec: SystemSpec, dtau: float) -> GridWavefunction:
    return _propagator(psi, spec).step_imaginary_time(psi, dtau)


def project_symmetry(psi: GridWavefunction, target: Symmetry) -> GridWavefunction:
    """(psi(x1, x2) +/- psi(x2, x1)), renormalized."""
    if psi.frame is not CoordinateFrame.TWO_PARTICLE:
        raise ValueError("Exchange projection needs a two-particle wavefunction")
    projected = 0.5 * (psi.amplitudes + target.sign * psi.amplitudes.T)
    weight = np.sum(np.abs(projected) ** 2) * psi.volume_element
    if weight < 1e-24 * max(psi.norm(), 1e-300):
        raise ZeroNormError(f"State has no component in the {target.value} sector")
    return psi.model_copy(update={"amplitudes": projected / np.sqrt(weight),
                                  "parity": Parity.of(target)})
