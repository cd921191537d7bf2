"""Plot-ready column files for the standard figures.

Layouts (one header line naming the columns):
  fig1   fig1.dat: t dU_pot dabs_x fit_dU_pot
  fig3   fig3_<symmetry>.dat: lambda omega_r omega_R weight_r weight_R area_r area_R
         fig3_spectrum_<symmetry>_<lambda>.dat: omega_ext E_inf excess
  fig4   fig4_kappa_<kappa>.dat: lambda omega_r omega_R
         fig4_antisymmetric.dat: lambda omega_r omega_R
  fig5   fig5_<symmetry>.dat: lambda omega_r omega_R
         fig5_split.dat: lambda delta_omega_r relative_split
"""
import logging
import math
import os
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

import numpy as np

from models.excitation import SwitchOff
from models.report import ResonanceSpectrum
from models.run import RunRecord
from models.system import Symmetry
from models.timeseries import ABSX, UPOT
from services.mode_analysis import evaluate_two_modes
from services.resonance import spectrum_report
from utils.errors import MissingRunsError
from utils.storage import read_timeseries, write_columns

FIGURES = ("fig1", "fig3", "fig4", "fig5")
FIG1_COUPLING = 1.0


def _fitted(records: Sequence[RunRecord]) -> List[RunRecord]:
    return [r for r in records if r.status == "completed" and r.report is not None
            and isinstance(r.config.protocol, SwitchOff)]


def _header(figure_id: str, records: Sequence[RunRecord]) -> dict:
    return {"figure": figure_id, "runs": [r.config_hash for r in records]}


def _curve(records: Sequence[RunRecord]) -> Dict[str, List[float]]:
    ordered = sorted(records, key=lambda r: r.config.system.coupling)
    return {
        "lambda": [r.config.system.coupling for r in ordered],
        "omega_r": [r.report.relative_frequency for r in ordered],
        "omega_R": [r.report.com_frequency for r in ordered],
    }


def _fig1(records, spectra, output_dir) -> List[str]:
    candidates = [r for r in _fitted(records) if r.series_path and r.config.system.dimension == 1
                  and r.config.system.symmetry is Symmetry.ANTISYMMETRIC]
    if not candidates:
        raise MissingRunsError("fig1", ["1D antisymmetric switch-off run (lambda=1) with a stored series"])
    record = min(candidates, key=lambda r: (abs(r.config.system.coupling - FIG1_COUPLING), r.config_hash))
    series = read_timeseries(record.series_path)
    t = series.times
    upot = series.channel(UPOT)
    fit_curve = evaluate_two_modes(record.fit, t) - upot[0]
    fit_curve[t < record.config.analysis_start] = math.nan
    path = os.path.join(output_dir, "fig1.dat")
    write_columns(path, {"t": t, "dU_pot": series.deviation(UPOT), "dabs_x": series.deviation(ABSX),
                         "fit_dU_pot": fit_curve}, _header("fig1", [record]))
    return [path]


def _spectrum_file(spectrum: ResonanceSpectrum, output_dir: str) -> str:
    w = np.asarray(spectrum.frequencies)
    e = np.asarray(spectrum.energies)
    baseline = np.interp(w, [w[0], w[-1]], [e[0], e[-1]])
    path = os.path.join(output_dir, f"fig3_spectrum_{spectrum.symmetry.value}_{spectrum.coupling:g}.dat")
    write_columns(path, {"omega_ext": w, "E_inf": e, "excess": e - baseline},
                  {"figure": "fig3", "coupling": spectrum.coupling, "symmetry": spectrum.symmetry.value})
    return path


def _areas(spectrum: Optional[ResonanceSpectrum]):
    if spectrum is None or not spectrum.peaks:
        return math.nan, math.nan
    report = spectrum_report(spectrum)
    return report.relative_weight, report.com_weight


def _fig3(records, spectra, output_dir) -> List[str]:
    fitted = [r for r in _fitted(records) if r.config.system.dimension == 1 and r.config.system.is_bare]
    if not fitted:
        raise MissingRunsError("fig3", ["1D bare-Coulomb switch-off sweep over lambda"])
    by_key = {(s.symmetry, s.coupling): s for s in spectra if s.dimension == 1}
    paths = []
    groups = defaultdict(list)
    for record in fitted:
        groups[record.config.system.symmetry].append(record)
    for symmetry, group in sorted(groups.items(), key=lambda item: item[0].value):
        ordered = sorted(group, key=lambda r: r.config.system.coupling)
        columns = _curve(ordered)
        columns["weight_r"] = [r.report.relative_weight for r in ordered]
        columns["weight_R"] = [r.report.com_weight for r in ordered]
        areas = [_areas(by_key.get((symmetry, r.config.system.coupling))) for r in ordered]
        columns["area_r"] = [a[0] for a in areas]
        columns["area_R"] = [a[1] for a in areas]
        path = os.path.join(output_dir, f"fig3_{symmetry.value}.dat")
        write_columns(path, columns, _header("fig3", ordered))
        paths.append(path)
    for spectrum in spectra:
        if spectrum.dimension == 1 and len(spectrum.frequencies) >= 2:
            paths.append(_spectrum_file(spectrum, output_dir))
    return paths


def _fig4(records, spectra, output_dir) -> List[str]:
    fitted = [r for r in _fitted(records) if r.config.system.dimension == 1]
    softened = [r for r in fitted if r.config.system.symmetry is Symmetry.SYMMETRIC
                and r.config.system.softening > 0.0]
    if not softened:
        raise MissingRunsError("fig4", ["1D symmetric sweep with softening > 0"])
    paths = []
    groups = defaultdict(list)
    for record in softened:
        groups[record.config.system.softening].append(record)
    for kappa, group in sorted(groups.items()):
        path = os.path.join(output_dir, f"fig4_kappa_{kappa:g}.dat")
        write_columns(path, _curve(group), _header("fig4", group))
        paths.append(path)
    reference = [r for r in fitted if r.config.system.symmetry is Symmetry.ANTISYMMETRIC
                 and r.config.system.is_bare]
    if reference:
        path = os.path.join(output_dir, "fig4_antisymmetric.dat")
        write_columns(path, _curve(reference), _header("fig4", reference))
        paths.append(path)
    else:
        logging.warning("fig4: no bare antisymmetric reference curve among the runs")
    return paths


def _fig5(records, spectra, output_dir) -> List[str]:
    fitted = [r for r in _fitted(records) if r.config.system.dimension == 2 and r.config.system.is_bare]
    if not fitted:
        raise MissingRunsError("fig5", ["2D symmetric and antisymmetric sweeps over lambda"])
    paths = []
    curves = {}
    for symmetry in Symmetry:
        group = [r for r in fitted if r.config.system.symmetry is symmetry]
        if not group:
            continue
        curves[symmetry] = _curve(group)
        path = os.path.join(output_dir, f"fig5_{symmetry.value}.dat")
        write_columns(path, curves[symmetry], _header("fig5", group))
        paths.append(path)

    if len(curves) == 2:
        sym = dict(zip(curves[Symmetry.SYMMETRIC]["lambda"], curves[Symmetry.SYMMETRIC]["omega_r"]))
        anti = curves[Symmetry.ANTISYMMETRIC]
        rows = [(lam, w - sym[lam], (w - sym[lam]) / big)
                for lam, w, big in zip(anti["lambda"], anti["omega_r"], anti["omega_R"]) if lam in sym]
        if rows:
            path = os.path.join(output_dir, "fig5_split.dat")
            write_columns(path, {"lambda": [r[0] for r in rows], "delta_omega_r": [r[1] for r in rows],
                                 "relative_split": [r[2] for r in rows]}, _header("fig5", fitted))
            paths.append(path)
    return paths


_EMITTERS = {"fig1": _fig1, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5}


def figure_emit(records: Sequence[RunRecord], figure_id: str, output_dir: str,
                spectra: Sequence[ResonanceSpectrum] = ()) -> List[str]:
    """Write the column files of one figure; raises MissingRunsError naming the runs it lacks."""
    if figure_id not in _EMITTERS:
        raise ValueError(f"Unknown figure '{figure_id}'; choose from {', '.join(FIGURES)}")
    paths = _EMITTERS[figure_id](list(records), list(spectra), output_dir)
    logging.info(f"{figure_id}: wrote {len(paths)} files to {output_dir}")
    return paths
