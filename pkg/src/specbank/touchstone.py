"""Touchstone v1 read/write for interchange with standard RF tooling.

Writer emits "# GHZ S RI R 50" with frequencies in GHz and real/imaginary
pairs in the standard row order: 1-port S11; 2-port S11 S21 S12 S22 (the
v1 column-major exception); n >= 3 ports row-major, one matrix row per
line group, wrapped at four pairs per line. Comment lines start with "!".
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .errors import TouchstoneError
from .grid import FrequencyGrid
from .network import SMatrix

OPTION_LINE = "# GHZ S RI R 50"

_FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


def _ports_from_suffix(path: Path) -> int:
    m = re.fullmatch(r"\.s(\d+)p", path.suffix.lower())
    if not m:
        raise TouchstoneError(f"{path.name}: expected a .sNp suffix")
    n = int(m.group(1))
    if n < 1:
        raise TouchstoneError(f"{path.name}: invalid port count in suffix")
    return n


def _pair_order(n: int):
    """(row, col) order of the 2n^2 values in one frequency block."""
    if n == 2:
        return [(0, 0), (1, 0), (0, 1), (1, 1)]
    return [(i, j) for i in range(n) for j in range(n)]


def write_touchstone(s: SMatrix, path) -> None:
    path = Path(path)
    n = s.n_ports
    if _ports_from_suffix(path) != n:
        raise TouchstoneError(f"{path.name}: suffix does not match a {n}-port network")

    lines = [f"! {n}-port S-parameters, ports: {' '.join(s.port_labels)}", OPTION_LINE]
    order = _pair_order(n)
    for k, f in enumerate(s.grid.points):
        vals = []
        for (i, j) in order:
            v = s.entries[k, i, j]
            vals.append(f"{v.real:.12e} {v.imag:.12e}")
        if n <= 2:
            lines.append(f"{f / 1e9:.12e} " + " ".join(vals))
        else:
            per_line = min(n, 4)
            lines.append(f"{f / 1e9:.12e} " + " ".join(vals[:per_line]))
            for start in range(per_line, len(vals), per_line):
                lines.append("  " + " ".join(vals[start:start + per_line]))
    atomic_write_text("\n".join(lines) + "\n", path)


def read_touchstone(path) -> SMatrix:
    path = Path(path)
    n = _ports_from_suffix(path)

    freq_scale = None
    numbers: list[float] = []
    for lineno, raw in enumerate(path.read_text(encoding="ascii").splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if freq_scale is not None:
                raise TouchstoneError(f"{path.name}:{lineno}: repeated option line")
            toks = line[1:].upper().split()
            unit = toks[0] if toks else "GHZ"
            if unit not in _FREQ_UNITS:
                raise TouchstoneError(f"{path.name}:{lineno}: unknown frequency unit {unit!r}")
            if "S" not in toks:
                raise TouchstoneError(f"{path.name}:{lineno}: only S-parameter files supported")
            fmt = next((t for t in toks if t in ("RI", "MA", "DB")), "MA")
            if fmt != "RI":
                raise TouchstoneError(f"{path.name}:{lineno}: only RI format supported")
            freq_scale = _FREQ_UNITS[unit]
            continue
        if freq_scale is None:
            raise TouchstoneError(f"{path.name}:{lineno}: data before option line")
        try:
            numbers.extend(float(t) for t in line.split())
        except ValueError:
            raise TouchstoneError(f"{path.name}:{lineno}: non-numeric data") from None

    if freq_scale is None:
        raise TouchstoneError(f"{path.name}: missing option line")
    block = 1 + 2 * n * n
    if not numbers or len(numbers) % block != 0:
        raise TouchstoneError(f"{path.name}: data size is not a whole number of "
                              f"{n}-port frequency blocks")
    data = np.asarray(numbers).reshape(-1, block)
    freqs = data[:, 0] * freq_scale
    if np.any(np.diff(freqs) <= 0):
        raise TouchstoneError(f"{path.name}: frequency column is not strictly ascending")

    entries = np.empty((data.shape[0], n, n), dtype=complex)
    for idx, (i, j) in enumerate(_pair_order(n)):
        entries[:, i, j] = data[:, 1 + 2 * idx] + 1j * data[:, 2 + 2 * idx]
    return SMatrix(grid=FrequencyGrid(freqs), entries=entries)
