"""Potentials of the two-particle problem and its center-of-mass / relative split."""
import math
from typing import Tuple

import numpy as np

from models.system import SystemSpec
from utils.errors import SingularEvaluationError


def _as_position(spec: SystemSpec, r) -> np.ndarray:
    position = np.atleast_1d(np.asarray(r, dtype=float))
    if position.shape != (spec.dimension,):
        raise ValueError(f"Expected a {spec.dimension}-component position, got shape {position.shape}")
    if not np.all(np.isfinite(position)):
        raise ValueError("Positions must be finite")
    return position


def interaction(spec: SystemSpec, separation):
    """lambda / (r^2 + kappa^2)^(l/2), elementwise over ``separation``."""
    r = np.abs(np.asarray(separation, dtype=float))
    if spec.coupling == 0.0:
        return np.zeros_like(r)
    if spec.is_bare and np.any(r == 0.0):
        raise SingularEvaluationError("Coincident particles with zero softening")
    return spec.coupling / (r * r + spec.softening ** 2) ** (0.5 * spec.interaction_exponent)


def total_potential(spec: SystemSpec, r1, r2) -> float:
    p1 = _as_position(spec, r1)
    p2 = _as_position(spec, r2)
    separation = float(np.linalg.norm(p1 - p2))
    return float(0.5 * p1 @ p1 + 0.5 * p2 @ p2 + interaction(spec, separation))


def relative_potential(spec: SystemSpec, r):
    """r^2/4 + w(r) for the relative coordinate; ``r`` is a separation or array of them."""
    r = np.asarray(r, dtype=float)
    return 0.25 * r * r + interaction(spec, r)


def center_of_mass_potential(R):
    R = np.asarray(R, dtype=float)
    return R * R


def to_relative_frame(r1, r2) -> Tuple[np.ndarray, np.ndarray]:
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    return 0.5 * (r1 + r2), r1 - r2


def to_particle_frame(R, r) -> Tuple[np.ndarray, np.ndarray]:
    R = np.asarray(R, dtype=float)
    r = np.asarray(r, dtype=float)
    return R + 0.5 * r, R - 0.5 * r


def classical_equilibrium_and_frequency(spec: SystemSpec) -> Tuple[float, float]:
    """Minimum r0 of the relative potential and the small-oscillation frequency about it.

    The relative coordinate has mass 1/2, so omega^2 = 2 V''(r0). For a bare
    r^(-l) repulsion this gives sqrt(l + 2) independent of the coupling. That is
    the computed small-oscillation value: sqrt(2l + 1) agrees with it only at l = 1.
    """
    if spec.coupling <= 0.0:
        raise ValueError("No interaction-stabilized minimum at zero coupling")

    lam = spec.coupling
    l = spec.interaction_exponent
    kappa_sq = spec.softening ** 2

    # stationarity: (r0^2 + kappa^2)^((l+2)/2) = 2 l lambda
    r0_sq = (2.0 * l * lam) ** (2.0 / (l + 2.0)) - kappa_sq
    if r0_sq <= 0.0:
        raise ValueError("Softening too large: the relative potential has its minimum at r = 0")
    r0 = math.sqrt(r0_sq)

    s = r0_sq + kappa_sq
    w2 = -lam * l * s ** (-0.5 * l - 1.0) + lam * l * (l + 2.0) * r0_sq * s ** (-0.5 * l - 2.0)
    curvature = 0.5 + w2
    return r0, math.sqrt(2.0 * curvature)


def classical_separation(spec: SystemSpec) -> float:
    """r0 when an interaction-stabilized minimum exists, 0 otherwise."""
    try:
        return classical_equilibrium_and_frequency(spec)[0]
    except ValueError:
        return 0.0


def relative_box_half_width(spec: SystemSpec) -> float:
    return 4.0 * classical_separation(spec) + 10.0
