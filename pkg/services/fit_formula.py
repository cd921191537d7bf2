"""Closed-form interpolation of the relative breathing frequency between the ideal and classical limits."""
import logging
from typing import Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from models.report import FitFormulaParams
from utils.errors import ConvergenceError

MIN_CALIBRATION_POINTS = 4


def eval_fit_formula(params: FitFormulaParams, coupling):
    """a exp[-arctan(b lambda + c)] + d, elementwise over ``coupling``."""
    lam = np.asarray(coupling, dtype=float)
    if np.any(lam < 0.0):
        raise ValueError("Coupling must be non-negative")
    value = params.a * np.exp(-np.arctan(params.b * lam + params.c)) + params.d
    return float(value) if value.ndim == 0 else value


def fit_formula_calibrate(points: Sequence[Tuple[float, float]], initial: Tuple[float, float] = (1.0, 0.0)
                          ) -> FitFormulaParams:
    """Least squares over (b, c); a and d follow from the two limits."""
    if len(points) < MIN_CALIBRATION_POINTS:
        raise ValueError(f"Calibration needs at least {MIN_CALIBRATION_POINTS} points, got {len(points)}")
    lam = np.array([p[0] for p in points], dtype=float)
    omega = np.array([p[1] for p in points], dtype=float)

    def residuals(x):
        return eval_fit_formula(FitFormulaParams(b=x[0], c=x[1]), lam) - omega

    result = least_squares(residuals, np.array(initial, dtype=float),
                           bounds=([1e-8, -1e3], [np.inf, 1e3]), xtol=1e-12, ftol=1e-12)
    if not result.success:
        raise ConvergenceError(f"Fit-formula calibration diverged: {result.message}")
    params = FitFormulaParams(b=float(result.x[0]), c=float(result.x[1]))
    logging.info(f"Calibrated fit formula b={params.b:.6f} c={params.c:.6f} "
                 f"(max deviation {np.max(np.abs(result.fun)):.2e})")
    return params


def max_deviation(params: FitFormulaParams, points: Sequence[Tuple[float, float]]) -> float:
    lam = np.array([p[0] for p in points], dtype=float)
    omega = np.array([p[1] for p in points], dtype=float)
    return float(np.max(np.abs(eval_fit_formula(params, lam) - omega)))
