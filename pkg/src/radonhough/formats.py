"""Text formats for gridded data and result tables.

A grid CSV starts with the descriptor line
``# t=2 lambda_star=... d=... bounds=... provenance=...``, followed by any
number of ``# key=value`` echo lines and then one row per first-axis index
(row-major order, values written with ``repr`` so they round-trip exactly).
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import Discretization
from .images import PixelImage, save_pgm
from .radon import Sinogram


def _echo_lines(echo) -> list[str]:
    lines = []
    for key, value in (echo or {}).items():
        text = str(value)
        if "\n" in text:
            raise ValueError(f"echo value for {key!r} spans several lines")
        lines.append(f"# {key}={text}")
    return lines


def write_grid_csv(path, disc: Discretization, values, provenance: str, echo=None) -> None:
    values = np.asarray(values, dtype=float)
    if values.shape != disc.shape:
        raise ValueError(f"values of shape {values.shape} do not match grid shape {disc.shape}")
    rows = values.reshape(disc.shape[0], -1)
    lines = [f"# {disc.to_header()} provenance={provenance}"] + _echo_lines(echo)
    lines += [",".join(repr(float(v)) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid_csv(path):
    """Return ``(disc, values, provenance, echo)`` from a grid CSV."""
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# t="):
        raise ValueError(f"{path}: missing grid descriptor line")
    disc = Discretization.from_header(text[0])
    fields = dict(tok.split("=", 1) for tok in text[0][1:].split() if "=" in tok)
    provenance = fields.get("provenance", "")
    echo, rows = {}, []
    for line in text[1:]:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            echo[key] = value
        elif line.strip():
            rows.append([float(v) for v in line.split(",")])
    values = np.array(rows, dtype=float)
    if values.size != int(np.prod(disc.shape)):
        raise ValueError(f"{path}: {values.size} values for a grid of shape {disc.shape}")
    return disc, values.reshape(disc.shape), provenance, echo


def write_sinogram(path, s: Sinogram, echo=None) -> None:
    write_grid_csv(path, s.disc, s.values, s.provenance, echo)


def read_sinogram(path) -> Sinogram:
    disc, values, provenance, _ = read_grid_csv(path)
    return Sinogram(disc, values, provenance)


def save_grid_pgm(values, path, maxval: int = 255) -> None:
    """Min-max normalized grey-level picture of a 2-D grid (first axis down the rows)."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("only two-dimensional grids can be saved as PGM")
    save_pgm(PixelImage.on_square(v), path, maxval=maxval, normalize=True)


def write_table(path, header: str, rows, echo=None) -> None:
    lines = _echo_lines(echo) + [header] + list(rows)
    Path(path).write_text("\n".join(lines) + "\n")
