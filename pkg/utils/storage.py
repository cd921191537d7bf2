"""On-disk formats: columnar time series, JSON summaries, checkpoints and the matrix-element cache."""
import hashlib
import json
import logging
import os
import tempfile
from typing import Any, Dict, Optional, Sequence

import numpy as np

from models.timeseries import TimeSeries
from models.wavefunction import Grid, GridWavefunction

HEADER_PREFIX = "# config: "


def config_hash(payload: Dict[str, Any]) -> str:
    """Stable short hash of a JSON-compatible mapping."""
    encoded = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()[:16]


def _atomic_write(path: str, write):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            write(handle)
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_columns(path: str, columns: Dict[str, Sequence[float]], config: Optional[Dict[str, Any]] = None):
    """Whitespace-separated columns with a commented header; the first header line carries ``config``."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[name], dtype=float) for name in names])

    def write(handle):
        if config is not None:
            handle.write((HEADER_PREFIX + json.dumps(config, sort_keys=True, default=str) + "\n").encode())
        handle.write(("# " + " ".join(names) + "\n").encode())
        np.savetxt(handle, data, fmt="%.12e")

    _atomic_write(path, write)


def read_columns(path: str):
    """Inverse of ``write_columns``: returns (columns, config or None)."""
    config = None
    names = None
    with open(path) as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            if line.startswith(HEADER_PREFIX):
                config = json.loads(line[len(HEADER_PREFIX):])
            else:
                names = line[1:].split()
    data = np.loadtxt(path, comments="#", ndmin=2)
    if names is None:
        raise ValueError(f"{path} has no column header")
    return {name: data[:, i] for i, name in enumerate(names)}, config


def write_timeseries(path: str, series: TimeSeries, config: Optional[Dict[str, Any]] = None):
    columns = {"t": series.times}
    columns.update(series.channels)
    write_columns(path, columns, config if config is not None else series.metadata)


def read_timeseries(path: str) -> TimeSeries:
    columns, config = read_columns(path)
    times = columns.pop("t")
    return TimeSeries(times=times, channels=columns, metadata=config or {})


def write_summary(path: str, summary: Dict[str, Any]):
    payload = json.dumps(summary, sort_keys=True, indent=2, default=str) + "\n"
    _atomic_write(path, lambda handle: handle.write(payload.encode()))


def read_summary(path: str) -> Dict[str, Any]:
    with open(path) as handle:
        return json.load(handle)


def save_checkpoint(path: str, psi: GridWavefunction):
    def write(handle):
        np.savez(handle,
                 grid=np.array(psi.grid.model_dump_json()),
                 frame=np.array(psi.frame.value),
                 parity=np.array(psi.parity.value),
                 angular_momentum=np.array(-1 if psi.angular_momentum is None else psi.angular_momentum),
                 amplitudes=psi.amplitudes)

    _atomic_write(path, write)


def load_checkpoint(path: str) -> GridWavefunction:
    with np.load(path, allow_pickle=False) as data:
        m = int(data["angular_momentum"])
        return GridWavefunction(grid=Grid.model_validate_json(str(data["grid"])),
                                amplitudes=data["amplitudes"],
                                frame=str(data["frame"]),
                                parity=str(data["parity"]),
                                angular_momentum=None if m < 0 else m)


class MatrixCache:
    """Write-once ``.npz`` store of coupling-independent matrix-element tables."""

    def __init__(self, directory: Optional[str]):
        self.directory = directory

    def path_for(self, key: Dict[str, Any]) -> Optional[str]:
        if not self.directory:
            return None
        return os.path.join(self.directory, f"elements_{config_hash(key)}.npz")

    def load(self, key: Dict[str, Any]) -> Optional[np.ndarray]:
        path = self.path_for(key)
        if path is None or not os.path.exists(path):
            return None
        try:
            with np.load(path, allow_pickle=False) as data:
                return data["elements"]
        except (OSError, ValueError, KeyError) as e:
            logging.warning(f"Ignoring unreadable matrix cache entry {path}: {e}")
            return None

    def store(self, key: Dict[str, Any], elements: np.ndarray):
        path = self.path_for(key)
        if path is None:
            return
        _atomic_write(path, lambda handle: np.savez(handle, elements=elements,
                                                    key=np.array(json.dumps(key, sort_keys=True))))
