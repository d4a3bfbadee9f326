"""
Writers for run artifacts: CSV tables, coefficient files, frame JSON and manifests
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .fields import PowerSpectrum
from .frame import NeedletFrame, WaveletCoefficients, frame_to_dict
from .harmonics import SpinCoefficients


def _cell(value: Any) -> str:
    """repr keeps floats bit-exact, so identical runs give identical files"""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Write a CSV table with a header row.

    Args:
        path: Output file; parent directories are created
        header: Column names
        rows: One sequence per row, same length as the header

    Returns:
        The path written
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row of length {len(row)} does not match header {list(header)}")
            writer.writerow([_cell(v) for v in row])
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def write_json(path: Path, data: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=False) + "\n", encoding='utf-8')
    return path


def write_coefficients(path: Path, coeffs: SpinCoefficients) -> Path:
    """One JSON header line, then CSV rows l, m, re, im for every valid (l, m)"""
    if coeffs.batch_shape:
        raise ValueError("write one field at a time")
    s, L = coeffs.spin, coeffs.band_limit
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline='', encoding='utf-8') as handle:
        handle.write("# " + json.dumps({"spin": s, "L": L}) + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["l", "m", "re", "im"])
        for l in range(abs(s), L + 1):
            for m in range(-l, l + 1):
                value = coeffs.data[l, m + L]
                writer.writerow([l, m, _cell(value.real), _cell(value.imag)])
    return path


def write_spectrum(path: Path, spectrum: PowerSpectrum) -> Path:
    return write_csv(path, ["l", "C_l"], ((l, spectrum[l]) for l in range(spectrum.band_limit + 1)))


def write_wavelets(path: Path, wavelets: WaveletCoefficients) -> Path:
    """CSV j, k, re, im for a single field"""
    rows = []
    for j in wavelets.scales:
        beta = wavelets.beta[j]
        if beta.ndim != 1:
            raise ValueError("write one field at a time")
        rows.extend((j, k, value.real, value.imag) for k, value in enumerate(beta))
    return write_csv(path, ["j", "k", "re", "im"], rows)


def write_frame(path: Path, frame: NeedletFrame, expand_cells: bool = False) -> Path:
    return write_json(path, frame_to_dict(frame, expand_cells=expand_cells))


def write_manifest(out_dir: Path, subcommand: str, config: Dict[str, Any], outputs: List[Path],
                   summary: Dict[str, Any], created: Optional[str] = None) -> Path:
    """
    manifest.json: the config that produced the run, its outputs and a summary.

    load_config accepts this file, so a run can be repeated from its manifest.
    Reruns with the same seed write identical bytes unless a creation time is given.
    """
    manifest = {
        "tool": "spinlet",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "outputs": sorted(p.name for p in outputs),
        "summary": summary,
    }
    if created is not None:
        manifest["created"] = created
    return write_json(out_dir / "manifest.json", manifest)
