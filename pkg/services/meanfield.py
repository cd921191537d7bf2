"""Semi-analytical limits of the relative breathing frequency.

Weak coupling: the ideal relative state is breathed by a uniform scaling
r -> s r, with the interaction averaged over the ideal density (a Hartree
picture). The curvature of the energy under scaling, with the kinetic term
fixed by the virial relation, gives omega^2 = 4 + [3 W'(1) + W''(1)] / (2 U)
where W(s) = <w(s r)> and U = <r^2/4>.

Strong coupling: two Gaussian charge clouds at separation d; the relative
coordinate oscillates in d^2/4 + lambda V(d) with V the Gaussian-smeared
interaction, so omega^2 = 1 + 2 lambda V''(d0).
"""
import logging
import math
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import dawsn

from models.report import HartreeResult, SemiclassicalResult
from models.system import CoordinateFrame, Parity, Symmetry, SystemSpec
from services.grid_propagator import build_radial_problem, default_grid, lowest_angular_momentum, \
    relative_line_problem
from services.oscillator_basis import BasisSector, graded_quadrature
from services.potentials import classical_separation
from utils.errors import ConvergenceError, NumericalFailure

HARTREE_REGIME = 1.0
SEMICLASSICAL_REGIME = 10.0
WIDTH_GRID_POINTS = 4000
RICHARDSON_STEP = 1e-3


def _ideal_relative_density(spec: SystemSpec):
    """Quadrature points on r >= 0 and the lowest non-interacting relative density on them."""
    if spec.dimension == 2:
        sector = BasisSector(dimension=2, frame=CoordinateFrame.RELATIVE, basis_size=1,
                             angular_momentum=lowest_angular_momentum(spec.symmetry))
    else:
        sector = BasisSector(dimension=1, frame=CoordinateFrame.RELATIVE, basis_size=1,
                             parity=Parity.of(spec.symmetry))
    points, weights = graded_quadrature(40.0, 400, 40)
    u = sector.functions(points)[0]
    density = u * u * (2.0 if spec.dimension == 1 else 1.0)
    return points, weights * density


def hartree_frequency(spec: SystemSpec, coupling: Optional[float] = None) -> HartreeResult:
    """Renormalized trap from ideal-state densities; omega_r = 2 Omega_eff."""
    spec = spec if coupling is None else spec.with_coupling(coupling)
    if spec.coupling > HARTREE_REGIME:
        logging.warning(f"Hartree model used at lambda={spec.coupling}; it is perturbative and "
                        f"unreliable above lambda={HARTREE_REGIME}")
    if spec.needs_bose_fermi_mapping:
        spec = spec.with_symmetry(Symmetry.ANTISYMMETRIC)

    r, weights = _ideal_relative_density(spec)
    trap_energy = float(np.sum(weights * 0.25 * r * r))

    l = spec.interaction_exponent
    g = r * r + spec.softening ** 2
    w = g ** (-0.5 * l)
    # W(s) = lambda <w(s r)>, differentiated at s = 1
    slope = -l * r * r * g ** (-0.5 * l - 1.0)
    curvature = -l * r * r * g ** (-0.5 * l - 1.0) + l * (l + 2.0) * r ** 4 * g ** (-0.5 * l - 2.0)
    lam = spec.coupling
    energy = lam * float(np.sum(weights * w))
    first = lam * float(np.sum(weights * slope))
    second = lam * float(np.sum(weights * curvature))

    omega_sq = 4.0 + (3.0 * first + second) / (2.0 * trap_energy)
    if omega_sq <= 0.0:
        raise NumericalFailure(f"Non-positive effective curvature at lambda={lam}")
    omega = math.sqrt(omega_sq)
    return HartreeResult(coupling=lam, effective_trap_frequency=0.5 * omega, frequency=omega,
                         interaction_energy=energy, interaction_slope=first, interaction_curvature=second,
                         trap_energy=trap_energy)


def gaussian_potential(separation, width: float):
    """Interaction of two charges whose separation is Gaussian-distributed about ``separation``.

    Principal value of int g(u) / (u + d) du for a normalized Gaussian g of
    standard deviation ``width``, which is sqrt(2)/width * D(d / (sqrt(2) width))
    with D Dawson's integral.
    """
    x = np.asarray(separation, dtype=float) / (math.sqrt(2.0) * width)
    return math.sqrt(2.0) / width * dawsn(x)


def gaussian_potential_quadrature(separation: float, width: float) -> float:
    """Same principal value by direct quadrature, folding the pole at u = -d onto v = 0."""
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * width)

    def g(u):
        return norm * math.exp(-0.5 * (u / width) ** 2)

    def integrand(v):
        return (g(v - separation) - g(-v - separation)) / v

    value, error = quad(integrand, 0.0, separation + 12.0 * width, limit=400, epsabs=1e-13)
    tail, _ = quad(integrand, separation + 12.0 * width, np.inf, limit=200)
    if not np.isfinite(value + tail):
        raise NumericalFailure("Quadrature of the smeared interaction failed")
    return value + tail


def relative_ground_width(spec: SystemSpec, points: int = WIDTH_GRID_POINTS) -> float:
    """RMS deviation of the relative separation about the classical r0 in the exact ground state."""
    if spec.needs_bose_fermi_mapping:
        spec = spec.with_symmetry(Symmetry.ANTISYMMETRIC)
    grid = default_grid(spec, CoordinateFrame.RELATIVE, points)
    if spec.dimension == 2:
        problem = build_radial_problem(spec, lowest_angular_momentum(spec.symmetry), grid)
    else:
        problem = relative_line_problem(spec, grid)
    _, states = problem.sector_eigenstates(1)
    if states.shape[1] == 0:
        raise NumericalFailure(f"No relative ground state found in the {spec.symmetry.value} sector")
    density = states[:, 0] ** 2
    density = density / density.sum()
    r0 = classical_separation(spec)
    return float(math.sqrt(np.sum(density * (np.abs(grid.coordinates) - r0) ** 2)))


def _second_derivative(f, x: float, h: float) -> float:
    def central(step):
        return (f(x + step) - 2.0 * f(x) + f(x - step)) / (step * step)

    return (4.0 * central(0.5 * h) - central(h)) / 3.0


def semiclassical_frequency(spec: SystemSpec, coupling: Optional[float] = None,
                            gaussian_width: Optional[float] = None) -> SemiclassicalResult:
    """omega_r^2 = 1 + 2 lambda V''(d0) for Gaussian clouds; the width defaults to the exact ground-state width."""
    spec = spec if coupling is None else spec.with_coupling(coupling)
    lam = spec.coupling
    if lam <= 0.0:
        raise ValueError("Semiclassical model needs a positive coupling")
    if lam < SEMICLASSICAL_REGIME:
        logging.warning(f"Semiclassical model used at lambda={lam}; it is reliable only for "
                        f"lambda above about {SEMICLASSICAL_REGIME}")
    width = relative_ground_width(spec) if gaussian_width is None else gaussian_width
    if width <= 0.0:
        raise ValueError("Gaussian width must be positive")

    def energy(d):
        return 0.25 * d * d + lam * float(gaussian_potential(d, width))

    r0 = classical_separation(spec) or (2.0 * lam) ** (1.0 / 3.0)
    upper = 3.0 * r0 + 10.0 * width
    result = minimize_scalar(energy, bounds=(1e-6, upper), method="bounded",
                             options={"xatol": 1e-12 * max(r0, 1.0)})
    d0 = float(result.x)
    if not result.success or d0 < 1e-3 * r0 or d0 > upper * (1.0 - 1e-6):
        raise ConvergenceError(f"No interior minimum of the mean-field energy at lambda={lam}")

    curvature = _second_derivative(lambda d: float(gaussian_potential(d, width)), d0, RICHARDSON_STEP * d0)
    omega_sq = 1.0 + 2.0 * lam * curvature
    if omega_sq <= 0.0:
        raise NumericalFailure(f"Non-positive mean-field curvature at lambda={lam}")
    return SemiclassicalResult(coupling=lam, gaussian_width=width, separation=d0,
                               potential_curvature=curvature, frequency=math.sqrt(omega_sq))
