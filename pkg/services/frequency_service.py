from typing import Any, Dict, List, Optional, Sequence

from models.report import FitFormulaParams, ModeReport
from models.system import SystemSpec
from services.fit_formula import eval_fit_formula, fit_formula_calibrate, max_deviation
from services.meanfield import hartree_frequency, semiclassical_frequency
from services.oscillator_basis import spectral_gap
from services.potentials import classical_equilibrium_and_frequency
from services.simulation import computational_spec


class FrequencyService:
    """Breathing frequencies that need no time propagation, in the shared report shape."""

    def __init__(self, spec: SystemSpec):
        self.spec = spec

    def _report(self, method: str, frequency: float, **extra) -> ModeReport:
        return ModeReport(method=method, coupling=self.spec.coupling, symmetry=self.spec.symmetry,
                          dimension=self.spec.dimension, relative_frequency=frequency, **extra)

    def classical(self) -> Dict[str, Any]:
        """Small oscillations of the point-charge pair about its equilibrium"""
        r0, omega = classical_equilibrium_and_frequency(self.spec)
        return {"report": self._report("classical", omega).model_dump(mode="json"), "separation": r0}

    def gap(self, basis_size: Optional[int] = None, angular_momentum: Optional[int] = None) -> Dict[str, Any]:
        """Diagonalization oracle E2 - E0 of the relative sector"""
        spec = computational_spec(self.spec)
        omega = spectral_gap(spec, basis_size, angular_momentum)
        report = self._report("gap", omega, bose_fermi_mapped=spec is not self.spec)
        return {"report": report.model_dump(mode="json"), "basis_size": basis_size}

    def meanfield(self, model: str) -> Dict[str, Any]:
        if model == "hartree":
            result = hartree_frequency(self.spec)
        elif model == "semiclassical":
            result = semiclassical_frequency(self.spec)
        else:
            raise ValueError(f"Unknown mean-field model '{model}'; use hartree or semiclassical")
        report = self._report(model, result.frequency, bose_fermi_mapped=self.spec.needs_bose_fermi_mapping)
        return {"report": report.model_dump(mode="json"), "details": result.model_dump(mode="json")}


def fit_formula_curve(params: FitFormulaParams, couplings: Sequence[float]) -> List[Dict[str, float]]:
    return [{"lambda": float(lam), "omega_r": float(eval_fit_formula(params, lam))} for lam in couplings]


def calibrate_fit_formula(points: Sequence[Sequence[float]]) -> Dict[str, Any]:
    pairs = [(float(p[0]), float(p[1])) for p in points]
    params = fit_formula_calibrate(pairs)
    return {"params": params.model_dump(mode="json"), "max_deviation": max_deviation(params, pairs)}
