"""Oscillator-eigenfunction representation of the relative, center-of-mass and two-particle Hamiltonians.

Every coordinate is expanded in the eigenfunctions of its own frequency-1
oscillator, so the interaction-free Hamiltonian is diagonal and the trap enters
as H(f) = H0 + (f - 1) X with X the matrix of the harmonic term. Oscillator
lengths follow from the masses: sqrt(2) for the relative coordinate, 1/sqrt(2)
for the center of mass.
"""
import logging
import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import LinAlgError, eigh, expm
from scipy.special import gammaln

from config import Config
from models.system import CoordinateFrame, Parity, Symmetry, SystemSpec
from models.wavefunction import BasisWavefunction, Grid, GridWavefunction
from services.grid_propagator import lowest_angular_momentum
from utils.errors import BasisTruncationError, ConvergenceError, DivergentMatrixElementError, NumericalFailure
from utils.storage import MatrixCache

RELATIVE_LENGTH = math.sqrt(2.0)
CENTER_OF_MASS_LENGTH = 1.0 / math.sqrt(2.0)

GAUSS_ORDER = 24
ELEMENT_TOLERANCE = 1e-8
MAX_REFINEMENTS = 6
LEAKAGE_FRACTION = 0.05
LEAKAGE_TOLERANCE = 1e-6


def hermite_functions(count: int, xi: np.ndarray) -> np.ndarray:
    """Rows are h_0 .. h_{count-1} at ``xi``, orthonormal on the real line.

    The recurrence carries a per-point log scale so high orders stay finite
    where exp(-xi^2/2) alone would underflow.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((count,) + xi.shape)
    log_scale = -0.5 * xi * xi - 0.25 * math.log(math.pi)
    previous = np.zeros_like(xi)
    current = np.ones_like(xi)
    out[0] = np.exp(log_scale)
    for n in range(count - 1):
        following = math.sqrt(2.0 / (n + 1)) * xi * current - math.sqrt(n / (n + 1)) * previous
        previous, current = current, following
        big = np.abs(current) > 1e150
        if np.any(big):
            factor = np.where(big, np.abs(current), 1.0)
            previous = previous / factor
            current = current / factor
            log_scale = log_scale + np.log(factor)
        out[n + 1] = current * np.exp(log_scale)
    return out


def laguerre_functions(count: int, alpha: int, t: np.ndarray) -> np.ndarray:
    """Rows are sqrt(n!/(n+alpha)!) t^(alpha/2) e^(-t/2) L_n^alpha(t), orthonormal on [0, inf)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((count,) + t.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_t = np.log(t)
    log_scale = np.where(t > 0.0, 0.5 * alpha * log_t, 0.0 if alpha == 0 else -np.inf) - 0.5 * t \
        - 0.5 * gammaln(alpha + 1.0)
    previous = np.zeros_like(t)
    current = np.ones_like(t)
    out[0] = np.exp(log_scale)
    for n in range(count - 1):
        following = ((2 * n + 1 + alpha - t) * current - math.sqrt(n * (n + alpha)) * previous) \
            / math.sqrt((n + 1) * (n + 1 + alpha))
        previous, current = current, following
        big = np.abs(current) > 1e150
        if np.any(big):
            factor = np.where(big, np.abs(current), 1.0)
            previous = previous / factor
            current = current / factor
            log_scale = log_scale + np.log(factor)
        out[n + 1] = current * np.exp(log_scale)
    return out


class BasisSector(BaseModel):
    """Which oscillator functions span a line problem: parity in 1D, angular momentum in 2D."""

    model_config = ConfigDict(frozen=True)

    dimension: int
    frame: CoordinateFrame
    basis_size: int
    parity: Parity = Parity.NONE
    angular_momentum: Optional[int] = None

    @property
    def length(self) -> float:
        return RELATIVE_LENGTH if self.frame is CoordinateFrame.RELATIVE else CENTER_OF_MASS_LENGTH

    @property
    def quantum_numbers(self) -> np.ndarray:
        k = np.arange(self.basis_size)
        if self.dimension == 2:
            return k
        if self.parity is Parity.EVEN:
            return 2 * k
        if self.parity is Parity.ODD:
            return 2 * k + 1
        return k

    @property
    def energies(self) -> np.ndarray:
        n = self.quantum_numbers.astype(float)
        if self.dimension == 2:
            return 2.0 * n + self.angular_momentum + 1.0
        return n + 0.5

    def trap_matrix(self) -> np.ndarray:
        """Matrix of the harmonic term (xi^2/2 in oscillator units) over the sector."""
        n = self.quantum_numbers.astype(float)
        size = self.basis_size
        matrix = np.zeros((size, size))
        if self.dimension == 2:
            alpha = self.angular_momentum
            np.fill_diagonal(matrix, 0.5 * (2.0 * n + 1.0 + alpha))
            off = -0.5 * np.sqrt((n[:-1] + 1.0) * (n[:-1] + 1.0 + alpha))
            matrix[np.arange(size - 1), np.arange(1, size)] = off
            matrix[np.arange(1, size), np.arange(size - 1)] = off
            return matrix
        np.fill_diagonal(matrix, 0.5 * (n + 0.5))
        if self.parity is Parity.NONE:
            # n -> n+2 sits two positions away in a full ladder
            i = np.arange(size - 2)
            off = 0.25 * np.sqrt((n[i] + 1.0) * (n[i] + 2.0))
            matrix[i, i + 2] = off
            matrix[i + 2, i] = off
        else:
            i = np.arange(size - 1)
            off = 0.25 * np.sqrt((n[i] + 1.0) * (n[i] + 2.0))
            matrix[i, i + 1] = off
            matrix[i + 1, i] = off
        return matrix

    def functions(self, coordinates: np.ndarray) -> np.ndarray:
        """Rows are the sector's functions at physical ``coordinates``.

        1D rows are normalized on the line; 2D rows are u(r) = sqrt(r) R(r) with
        the angular factor normalized out, so int u^2 dr = 1 in both cases.
        """
        b = self.length
        x = np.asarray(coordinates, dtype=float)
        n = self.quantum_numbers
        if self.dimension == 2:
            rho = x / b
            values = laguerre_functions(self.basis_size, self.angular_momentum, rho * rho)
            return values * np.sqrt(2.0 * rho) / math.sqrt(b)
        values = hermite_functions(int(n[-1]) + 1, x / b)[n]
        return values / math.sqrt(b)

    def cache_key(self, spec: SystemSpec) -> dict:
        return {"dimension": self.dimension, "sector": self.parity.value, "m": self.angular_momentum,
                "kappa": spec.softening, "l": spec.interaction_exponent, "basis_size": self.basis_size}


def sector_for(spec: SystemSpec, frame: CoordinateFrame, basis_size: int,
               angular_momentum: Optional[int] = None) -> BasisSector:
    if frame is CoordinateFrame.TWO_PARTICLE:
        raise ValueError("The two-particle basis is a product of a center-of-mass and a relative sector")
    if spec.dimension == 2:
        if frame is CoordinateFrame.CENTER_OF_MASS:
            m = 0
        else:
            m = lowest_angular_momentum(spec.symmetry) if angular_momentum is None else angular_momentum
            if (m % 2 == 0) != (spec.symmetry is Symmetry.SYMMETRIC):
                raise ValueError(f"Angular momentum m={m} is not in the {spec.symmetry.value} sector")
        return BasisSector(dimension=2, frame=frame, basis_size=basis_size, parity=Parity.NONE,
                           angular_momentum=m)
    parity = Parity.EVEN if frame is CoordinateFrame.CENTER_OF_MASS else Parity.of(spec.symmetry)
    return BasisSector(dimension=1, frame=frame, basis_size=basis_size, parity=parity)


def _check_integrable(spec: SystemSpec, sector: BasisSector):
    if not spec.is_bare:
        return
    l = spec.interaction_exponent
    if sector.dimension == 1:
        lowest_power = 0 if sector.parity is Parity.EVEN else 2
    else:
        lowest_power = 2 * sector.angular_momentum + 1
    if lowest_power - l <= -1.0:
        hint = " Use the Bose-Fermi mapping (antisymmetric sector) for bare 1D interactions." \
            if sector.dimension == 1 else ""
        raise DivergentMatrixElementError(
            f"Interaction elements of r^-{l:g} diverge in this sector without softening.{hint}")


def graded_quadrature(x_max: float, uniform_panels: int, levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, x_max]: panels halve in width towards 0 below 1, uniform above."""
    graded = 0.5 ** np.arange(levels, 0, -1)
    uniform = np.linspace(1.0, x_max, uniform_panels + 1)
    edges = np.concatenate(([0.0], graded, uniform))
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_ORDER)
    lower = edges[:-1, None]
    width = np.diff(edges)[:, None]
    points = lower + 0.5 * width * (nodes[None, :] + 1.0)
    return points.ravel(), (0.5 * width * weights[None, :]).ravel()


def _unit_interaction_elements(spec: SystemSpec, sector: BasisSector) -> np.ndarray:
    """Elements of (r^2 + kappa^2)^(-l/2) over the sector, refined until stable to ELEMENT_TOLERANCE."""
    unit = spec.with_coupling(1.0)
    n_max = int(sector.quantum_numbers[-1])
    # turning point of the highest function plus a decay margin, in oscillator units
    reach = math.sqrt(2.0 * (2 * n_max if sector.dimension == 2 else n_max) + 1.0) + 10.0
    x_max = reach * sector.length
    uniform_panels = max(16, int(4 * reach))
    levels = 30

    def evaluate(panels: int, depth: int) -> np.ndarray:
        points, weights = graded_quadrature(x_max, panels, depth)
        basis = sector.functions(points)
        w = unit.coupling / (points * points + unit.softening ** 2) ** (0.5 * unit.interaction_exponent)
        # integrands are even in 1D, so integrate over half the line
        scale = 2.0 if sector.dimension == 1 else 1.0
        return scale * (basis * (weights * w)) @ basis.T

    elements = evaluate(uniform_panels, levels)
    for _ in range(MAX_REFINEMENTS):
        uniform_panels *= 2
        levels += 10
        refined = evaluate(uniform_panels, levels)
        change = np.max(np.abs(refined - elements))
        elements = refined
        if change <= ELEMENT_TOLERANCE * max(np.max(np.abs(elements)), 1e-300):
            return 0.5 * (elements + elements.T)
    raise ConvergenceError("Interaction matrix elements did not converge under quadrature refinement")


_matrix_cache = MatrixCache(Config.MATRIX_CACHE_DIR)


def set_matrix_cache(cache: MatrixCache):
    global _matrix_cache
    _matrix_cache = cache
    _unit_elements_cached.cache_clear()


@lru_cache(maxsize=32)
def _unit_elements_cached(spec: SystemSpec, sector: BasisSector) -> np.ndarray:
    key = sector.cache_key(spec)
    elements = _matrix_cache.load(key)
    if elements is not None and elements.shape == (sector.basis_size, sector.basis_size):
        return elements
    logging.info(f"Computing interaction elements for {key}")
    elements = _unit_interaction_elements(spec, sector)
    _matrix_cache.store(key, elements)
    return elements


def interaction_matrix_elements(spec: SystemSpec, basis_size: int,
                                angular_momentum: Optional[int] = None) -> np.ndarray:
    """<n| w |n'> over the relative sector of ``spec``; linear in the coupling."""
    if basis_size < 2:
        raise ValueError("Basis size must be at least 2")
    sector = sector_for(spec, CoordinateFrame.RELATIVE, basis_size, angular_momentum)
    if spec.coupling == 0.0:
        return np.zeros((basis_size, basis_size))
    _check_integrable(spec, sector)
    table_spec = spec.model_copy(update={"coupling": 1.0, "symmetry": Symmetry.ANTISYMMETRIC})
    return spec.coupling * _unit_elements_cached(table_spec, sector)


class HamiltonianMatrix(BaseModel):
    """H(f) = diag(unperturbed) + (f - 1) trap + interaction over one sector."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: SystemSpec
    sector: BasisSector
    unperturbed: np.ndarray
    trap: np.ndarray
    interaction: np.ndarray

    @property
    def frame(self) -> CoordinateFrame:
        return self.sector.frame

    @property
    def basis_size(self) -> int:
        return self.sector.basis_size

    def matrix(self, trap_factor: float = 1.0) -> np.ndarray:
        h = self.interaction + (trap_factor - 1.0) * self.trap
        return h + np.diag(self.unperturbed)


def build_hamiltonian(spec: SystemSpec, frame: CoordinateFrame, basis_size: Optional[int] = None,
                      angular_momentum: Optional[int] = None) -> HamiltonianMatrix:
    basis_size = basis_size or Config.BASIS_SIZE
    sector = sector_for(spec, frame, basis_size, angular_momentum)
    if frame is CoordinateFrame.RELATIVE:
        interaction = interaction_matrix_elements(spec, basis_size, sector.angular_momentum)
    else:
        interaction = np.zeros((basis_size, basis_size))
    return HamiltonianMatrix(spec=spec, sector=sector, unperturbed=sector.energies,
                             trap=sector.trap_matrix(), interaction=interaction)


def diagonalize(hamiltonian: HamiltonianMatrix, trap_factor: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and column eigenvectors of the sector Hamiltonian."""
    try:
        return eigh(hamiltonian.matrix(trap_factor))
    except (LinAlgError, ValueError) as e:
        raise NumericalFailure(f"Eigen-solver failed: {e}") from e


def relative_sector_levels(spec: SystemSpec, count: int = 4, basis_size: Optional[int] = None,
                           angular_momentum: Optional[int] = None) -> np.ndarray:
    energies, _ = diagonalize(build_hamiltonian(spec, CoordinateFrame.RELATIVE, basis_size, angular_momentum))
    return energies[:count]


def spectral_gap(spec: SystemSpec, basis_size: Optional[int] = None,
                 angular_momentum: Optional[int] = None) -> float:
    """Relative breathing frequency as the distance between the two lowest levels of the sector.

    Consecutive levels of one parity (or one m) are two oscillator quanta apart,
    which is E2 - E0 of the full relative ladder.
    """
    levels = relative_sector_levels(spec, 2, basis_size, angular_momentum)
    return float(levels[1] - levels[0])


def cartesian_relative_levels(per_axis: int, count: int = 6, length: float = 1.0) -> np.ndarray:
    """Lowest levels of -nabla^2 + r^2/4 in a 2D Cartesian Hermite product basis of oscillator length ``length``.

    The length is deliberately not the matched one, so the kinetic and trap
    matrices are both non-diagonal and the spectrum is a genuine check of
    the radial reduction at zero coupling.
    """
    n = np.arange(per_axis, dtype=float)
    xi_sq = np.diag(n + 0.5)
    p_sq = np.diag(n + 0.5)
    i = np.arange(per_axis - 2)
    off = 0.5 * np.sqrt((n[i] + 1.0) * (n[i] + 2.0))
    xi_sq[i, i + 2] = xi_sq[i + 2, i] = off
    p_sq[i, i + 2] = p_sq[i + 2, i] = -off
    axis = p_sq / length ** 2 + 0.25 * length ** 2 * xi_sq
    identity = np.eye(per_axis)
    hamiltonian = np.kron(axis, identity) + np.kron(identity, axis)
    return eigh(hamiltonian, eigvals_only=True)[:count]


class BasisPropagator:
    """Midpoint-exponential time stepping over one sector, or over a CoM x relative product."""

    def __init__(self, spec: SystemSpec, frame: CoordinateFrame, basis_size: Optional[int] = None,
                 angular_momentum: Optional[int] = None):
        self.spec = spec
        self.frame = frame
        if frame is CoordinateFrame.TWO_PARTICLE:
            if spec.dimension != 1:
                raise ValueError("The two-particle product basis is built for one dimension")
            size = basis_size or Config.PAIR_BASIS_SIZE
            factor = int(round(math.sqrt(size)))
            if factor * factor != size:
                raise ValueError(f"Pair basis size {size} must be a perfect square")
            com_sector = BasisSector(dimension=1, frame=CoordinateFrame.CENTER_OF_MASS, basis_size=factor)
            self.center_of_mass = HamiltonianMatrix(spec=spec, sector=com_sector, unperturbed=com_sector.energies,
                                                    trap=com_sector.trap_matrix(),
                                                    interaction=np.zeros((factor, factor)))
            self.relative = build_hamiltonian(spec, CoordinateFrame.RELATIVE, factor)
            self.parity = Parity.of(spec.symmetry)
            self.angular_momentum = None
        else:
            self.hamiltonian = build_hamiltonian(spec, frame, basis_size, angular_momentum)
            self.parity = self.hamiltonian.sector.parity
            self.angular_momentum = self.hamiltonian.sector.angular_momentum
        self._propagator_key = None
        self._propagator = None
        self._tables = {}

    def wrap(self, coefficients: np.ndarray) -> BasisWavefunction:
        return BasisWavefunction(coefficients=coefficients, frame=self.frame, parity=self.parity,
                                 angular_momentum=self.angular_momentum)

    def _factors(self):
        if self.frame is CoordinateFrame.TWO_PARTICLE:
            return self.center_of_mass, self.relative
        return (self.hamiltonian,)

    def _apply(self, coefficients: np.ndarray, trap_factor: float) -> np.ndarray:
        if self.frame is CoordinateFrame.TWO_PARTICLE:
            return self.center_of_mass.matrix(trap_factor) @ coefficients \
                + coefficients @ self.relative.matrix(trap_factor).T
        return self.hamiltonian.matrix(trap_factor) @ coefficients

    def expectation(self, psi: BasisWavefunction, matrices) -> float:
        c = psi.coefficients
        if self.frame is CoordinateFrame.TWO_PARTICLE:
            com, rel = matrices
            value = np.vdot(c, com @ c) + np.vdot(c, c @ rel.T)
        else:
            value = np.vdot(c, matrices[0] @ c)
        return float(value.real / psi.norm())

    def energy(self, psi: BasisWavefunction, trap_factor: float = 1.0) -> float:
        return self.expectation(psi, [h.matrix(trap_factor) for h in self._factors()])

    def trap_energy(self, psi: BasisWavefunction) -> float:
        return self.expectation(psi, [h.trap for h in self._factors()])

    def ground_state(self) -> Tuple[BasisWavefunction, float]:
        vectors = []
        energy = 0.0
        for factor in self._factors():
            levels, states = diagonalize(factor)
            vectors.append(states[:, 0])
            energy += levels[0]
        if self.frame is CoordinateFrame.TWO_PARTICLE:
            coefficients = np.outer(vectors[0], vectors[1])
        else:
            coefficients = vectors[0]
        return self.wrap(coefficients.astype(complex)), float(energy)

    def leakage(self, psi: BasisWavefunction) -> float:
        weights = np.abs(psi.coefficients) ** 2
        if weights.ndim == 1:
            top = max(1, int(math.ceil(LEAKAGE_FRACTION * weights.size)))
            return float(weights[-top:].sum())
        top_com = max(1, int(math.ceil(LEAKAGE_FRACTION * weights.shape[0])))
        top_rel = max(1, int(math.ceil(LEAKAGE_FRACTION * weights.shape[1])))
        return float(weights[-top_com:, :].sum() + weights[:-top_com, -top_rel:].sum())

    def _step_operators(self, trap_factor: float, dt: float):
        key = (trap_factor, dt)
        if key != self._propagator_key:
            try:
                self._propagator = [expm(-1j * dt * h.matrix(trap_factor)) for h in self._factors()]
            except (LinAlgError, ValueError) as e:
                raise NumericalFailure(f"Matrix exponential failed: {e}") from e
            self._propagator_key = key
        return self._propagator

    def step_real_time(self, psi: BasisWavefunction, trap_factor: float, dt: float) -> BasisWavefunction:
        """Advance by exp(-i dt H(f)); ``trap_factor`` is taken at the midpoint of the step."""
        if dt <= 0.0:
            raise ValueError("Time step must be positive")
        operators = self._step_operators(trap_factor, dt)
        if self.frame is CoordinateFrame.TWO_PARTICLE:
            coefficients = operators[0] @ psi.coefficients @ operators[1].T
        else:
            coefficients = operators[0] @ psi.coefficients
        advanced = psi.with_coefficients(coefficients)
        leaked = self.leakage(advanced)
        if leaked > LEAKAGE_TOLERANCE:
            raise BasisTruncationError(f"Population {leaked:.2e} reached the top of the basis; "
                                       f"increase the basis size")
        return advanced

    def _function_tables(self, grid: Grid):
        if grid not in self._tables:
            x = grid.coordinates
            if self.frame is CoordinateFrame.TWO_PARTICLE:
                R = 0.5 * (x[:, None] + x[None, :])
                r = x[:, None] - x[None, :]
                tables = (self.center_of_mass.sector.functions(R.ravel()),
                          self.relative.sector.functions(r.ravel()))
            else:
                tables = (self.hamiltonian.sector.functions(x),)
            self._tables[grid] = tables
        return self._tables[grid]

    def sample(self, psi: BasisWavefunction, grid: Grid) -> np.ndarray:
        """Amplitudes on ``grid``; psi(x1, x2) on grid x grid for the two-particle product basis."""
        tables = self._function_tables(grid)
        if self.frame is CoordinateFrame.TWO_PARTICLE:
            n = grid.points
            return np.einsum("ij,ip,jp->p", psi.coefficients, *tables).reshape(n, n)
        return psi.coefficients @ tables[0]

    def to_grid(self, psi: BasisWavefunction, grid: Grid) -> GridWavefunction:
        amplitudes = self.sample(psi, grid)
        m = self.angular_momentum if grid.radial else None
        return GridWavefunction(grid=grid, amplitudes=amplitudes, frame=self.frame, parity=self.parity,
                                angular_momentum=m)


@lru_cache(maxsize=16)
def basis_propagator_for(spec: SystemSpec, frame: CoordinateFrame, basis_size: Optional[int] = None,
                         angular_momentum: Optional[int] = None) -> BasisPropagator:
    return BasisPropagator(spec, frame, basis_size, angular_momentum)


def propagate_basis(psi: BasisWavefunction, spec: SystemSpec, trap_factor: float, dt: float,
                    basis_size: Optional[int] = None) -> BasisWavefunction:
    size = basis_size or psi.basis_size
    return basis_propagator_for(spec, psi.frame, size, psi.angular_momentum).step_real_time(psi, trap_factor, dt)
