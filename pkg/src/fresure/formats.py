"""CSV and JSON formats.

FID CSV        ``t_s,re,im``
Spectrum CSV   ``freq_hz,amplitude,re,im``
Series CSV     one value per line, optional header
Allan CSV      ``m,sigma_hz`` (or one sigma column per label)
Sweep CSV      ``n,delta_s_over_s``

Numbers are written with ``%.17g`` so that export/import/export is exact.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import FidRecord
from .spectra import Spectrum

FMT = "%.17g"


class FormatError(ValueError):
    """A data file does not follow the expected layout."""


def _open_for_write(path):
    path = Path(path)
    try:
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def _write_rows(path, header, columns):
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([FMT % v for v in row])
    return Path(path)


def _read_rows(path) -> list[list[str]]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        return list(csv.reader(fh))


def _read_table(path, expected):
    rows = _read_rows(path)
    if not rows:
        raise FormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header != list(expected):
        raise FormatError(f"{path}: expected header {','.join(expected)}, got {','.join(header)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if data.size == 0:
        raise FormatError(f"{path}: no data rows")
    if data.shape[1] != len(expected):
        raise FormatError(f"{path}: rows must have {len(expected)} columns")
    return data


def write_fid_csv(fid: FidRecord, path) -> Path:
    return _write_rows(path, ["t_s", "re", "im"], [fid.times, fid.values.real, fid.values.imag])


def read_fid_csv(path) -> FidRecord:
    data = _read_table(path, ["t_s", "re", "im"])
    t = data[:, 0]
    if t.size < 2:
        raise FormatError(f"{path}: need at least two samples")
    dt = t[1] - t[0]
    if abs(t[0]) > 1e-12 or not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0):
        raise FormatError(f"{path}: time axis must start at 0 and be uniform")
    return FidRecord(float(dt), data[:, 1] + 1j * data[:, 2], {"source": str(path)})


def write_spectrum_csv(spec: Spectrum, path) -> Path:
    z = spec.complex_values
    return _write_rows(path, ["freq_hz", "amplitude", "re", "im"], [spec.freq_hz, spec.amplitude, z.real, z.imag])


def read_spectrum_csv(path) -> Spectrum:
    data = _read_table(path, ["freq_hz", "amplitude", "re", "im"])
    z = data[:, 2] + 1j * data[:, 3]
    amp = data[:, 1]
    if np.array_equal(amp, z.real):
        mode = "absorption"
    elif np.allclose(amp, np.abs(z), rtol=1e-12, atol=0):
        mode = "magnitude"
    else:
        mode = "custom"
    return Spectrum(data[:, 0], z, mode, amplitude=amp)


def read_series_csv(path) -> np.ndarray:
    """Single-column numeric series; a non-numeric first line is a header."""
    rows = [r for r in _read_rows(path) if r]
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    if any(len(r) != 1 for r in rows):
        raise FormatError(f"{path}: expected a single column")
    if not rows:
        raise FormatError(f"{path}: no data rows")
    try:
        return np.array([float(r[0]) for r in rows])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_series_csv(values, path, name: str = "value") -> Path:
    return _write_rows(path, [name], [np.asarray(values, dtype=float)])


def write_allan_csv(m_values, sigmas: dict, path) -> Path:
    names = list(sigmas)
    header = ["m"] + (["sigma_hz"] if names == ["sigma_hz"] else [f"sigma_{k}_hz" for k in names])
    return _write_rows(path, header, [np.asarray(m_values, dtype=float)] + [sigmas[k] for k in names])


def write_sweep_csv(results, path) -> Path:
    return _write_rows(path, ["n", "delta_s_over_s"], [[r.n for r in results], [r.delta_s_over_s for r in results]])


def write_json(obj, path) -> Path:
    with _open_for_write(path) as fh:
        json.dump(obj, fh, indent=2, ensure_ascii=False, default=_json_default)
        fh.write("\n")
    return Path(path)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")
