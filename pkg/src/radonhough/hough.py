"""Weighted Hough counter for solvable families, rescaling and peak detection.

With ``f = lam_t - F(x; lam')`` the kernel selects, in every column of cells
sharing the prefix centre ``c'(lam')``, the single cell whose centre
``lam_t`` satisfies ``-d_t/2 <= lam_t - F(x; c'(lam')) < d_t/2``. The
accumulators below therefore loop over columns and compute the target cell
directly instead of testing every cell.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .families import SolvableFamily
from .grid import Discretization
from .images import DiscreteImage, PixelImage
from .radon import Sinogram, _sum_uniform_cdf, index_ranges, map_columns


class UnsupportedFamilyError(TypeError):
    """The requested accumulation strategy does not support this family."""


@dataclass(frozen=True)
class HoughCounter:
    disc: Discretization
    values: np.ndarray
    rescaled: bool = False
    skipped: int = field(default=0, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.disc.shape:
            raise ValueError(f"values of shape {v.shape} do not match grid shape {self.disc.shape}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class Peak:
    index: tuple[int, ...]
    center: tuple[float, ...]
    value: float


def kernel(fam: SolvableFamily, x, lam, disc: Discretization) -> int:
    """Hough kernel: 1 if ``-d_t/2 <= lam_t - F(x; c'(lam')) < d_t/2`` else 0."""
    lam = [float(v) for v in lam]
    prefix = disc.snap_prefix(lam[:-1]) if disc.t > 1 else ()
    F = float(fam.F(np.asarray(x, dtype=float), np.asarray(prefix, dtype=float)))
    half = disc.d[-1] / 2
    diff = lam[-1] - F
    return int(-half <= diff < half)


def target_index(disc: Discretization, F):
    """Last-axis index ``n`` whose centre satisfies the kernel bracket for the values ``F``.

    The candidate from the floor formula is checked against the bracket in
    floating point, so the result agrees exactly with :func:`kernel`.
    """
    F = np.asarray(F, dtype=float)
    ls, d = disc.lambda_star[-1], disc.d[-1]
    half = d / 2
    n0 = np.ceil((F - ls) / d - 0.5).astype(np.int64)
    out = n0.copy()
    for cand in (n0 + 1, n0 - 1):
        diff0 = (ls + out * d) - F
        bad = ~((-half <= diff0) & (diff0 < half))
        diff = (ls + cand * d) - F
        good = (-half <= diff) & (diff < half)
        out = np.where(bad & good, cand, out)
    return out


def _prefix_centers(disc: Discretization) -> np.ndarray:
    """Centres of all prefix columns in row-major order, shape ``(C, t-1)``."""
    if disc.t == 1:
        return np.zeros((1, 0))
    axes = [disc.centers(k) for k in range(disc.t - 1)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def accumulate_discrete(fam: SolvableFamily, img: DiscreteImage, disc: Discretization) -> HoughCounter:
    """Weighted Hough counter ``H(lam) = sum_j mu_j p(x_j, lam)`` of a point set.

    Each point adds its weight to exactly one cell per prefix column; if
    that cell is outside the grid the vote is dropped and counted in
    ``skipped``.
    """
    if disc.t != fam.t:
        raise ValueError(f"grid has t={disc.t} but family {fam.name} has t={fam.t}")
    prefixes = _prefix_centers(disc)                         # (C, t-1)
    F = fam.F(img.points[None, :, :], prefixes[:, None, :])  # (C, nu)
    F = np.broadcast_to(F, (len(prefixes), len(img)))
    n = target_index(disc, F)
    ok = (n >= disc.n_lo[-1]) & (n <= disc.n_hi[-1])
    J = disc.shape[-1]
    col = np.broadcast_to(np.arange(len(prefixes))[:, None], n.shape)
    flat = col[ok] * J + (n[ok] - disc.n_lo[-1])
    w = np.broadcast_to(img.weights[None, :], n.shape)[ok]
    values = np.bincount(flat, weights=w, minlength=len(prefixes) * J)
    return HoughCounter(disc, values.reshape(disc.shape), skipped=int((~ok).sum()))


def _strip_column(X, Y, V, a, omega, offset, edges):
    """Mass of the pixels between consecutive ``edges`` of ``F = omega . x + offset``."""
    w1, w2 = float(omega[0]), float(omega[1])
    proj = X * w1 + Y * w2 + offset
    w = a * (abs(w1) + abs(w2))
    area = 4 * a * a
    E = len(edges)
    e0 = edges[0]
    de = edges[1] - edges[0]
    G = np.zeros(E)
    # pixels entirely below an edge contribute their whole mass from that edge on
    k_full = np.clip(np.ceil((proj + w - e0) / de).astype(np.int64), 0, E)
    full = np.bincount(k_full, weights=V * area, minlength=E + 1)
    G += np.cumsum(full)[:E]
    # edges cutting through a pixel
    k_lo = np.clip(np.floor((proj - w - e0) / de).astype(np.int64) + 1, 0, E)
    i, j = index_ranges(k_lo, k_full)
    part = area * _sum_uniform_cdf(edges[j] - proj[i], a * abs(w1), a * abs(w2))
    G += np.bincount(j, weights=V[i] * part, minlength=E)
    return np.diff(G)


def _supersample_column(fam, pts, weights, prefix, disc):
    F = fam.F(pts, prefix[None, :])
    n = target_index(disc, F)
    ok = (n >= disc.n_lo[-1]) & (n <= disc.n_hi[-1])
    J = disc.shape[-1]
    return np.bincount(n[ok] - disc.n_lo[-1], weights=weights[ok], minlength=J)


def accumulate_pixel(fam: SolvableFamily, img: PixelImage, disc: Discretization,
                     strategy: str = "exact-strip", supersample: int = 8, threads: int = 1) -> HoughCounter:
    """Hough counter ``H(lam) = integral m(x) p(x, lam) dx`` of a pixel image.

    ``strategy="exact-strip"`` (families affine in ``x`` only) gives, per
    cell, the exact mass of the strip ``lam_t - d_t/2 < F <= lam_t + d_t/2``
    from closed-form half-plane areas. ``strategy="supersample"`` evaluates
    the kernel at ``supersample^2`` sub-pixel centres.
    """
    if disc.t != 2 or fam.n != 2:
        raise ValueError("pixel accumulation needs a plane image and a two-dimensional grid")
    X, Y, V = img.nonzero_pixels()
    a = img.half_side
    prefixes = _prefix_centers(disc)
    if strategy == "exact-strip":
        if fam.linear is None:
            raise UnsupportedFamilyError(f"exact-strip needs a family affine in x, not {fam.name}")
        edges = disc.edges(1)

        def column(i):
            omega, offset = fam.linear(prefixes[i])
            return _strip_column(X, Y, V, a, omega, offset, edges)
    elif strategy == "supersample":
        s = int(supersample)
        if s < 1:
            raise ValueError("supersample factor must be >= 1")
        off = -a + (2 * np.arange(s) + 1) * a / s
        ox, oy = np.meshgrid(off, off)
        pts = np.stack([(X[:, None] + ox.ravel()).ravel(), (Y[:, None] + oy.ravel()).ravel()], axis=-1)
        weights = np.repeat(V, s * s) * (2 * a / s) ** 2

        def column(i):
            return _supersample_column(fam, pts, weights, prefixes[i], disc)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    cols = map_columns(column, len(prefixes), threads)
    return HoughCounter(disc, np.array(cols).reshape(disc.shape))


def rescale(counter) -> Sinogram:
    """Rescaled Hough counter ``H / d_t`` as a sinogram tagged ``hough-rescaled``."""
    if isinstance(counter, Sinogram):
        raise ValueError("already a sinogram; the counter has been rescaled")
    if counter.rescaled:
        raise ValueError("counter is already rescaled")
    return Sinogram(counter.disc, counter.values / counter.disc.d[-1], "hough-rescaled")


def detect_peaks(counter, k: int = 1, min_separation: int = 1) -> list[Peak]:
    """Top ``k`` cells with non-maximum suppression.

    A cell is rejected if an already accepted peak lies within
    ``min_separation`` cells along every axis. Ties go to the
    lexicographically smallest index.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    values = np.asarray(counter.values)
    if values.size == 0:
        raise ValueError("empty counter")
    disc = counter.disc
    flat = values.ravel()
    order = np.lexsort((np.arange(flat.size), -flat))
    peaks: list[Peak] = []
    taken: list[np.ndarray] = []
    for pos in order:
        arr_idx = np.array(np.unravel_index(pos, values.shape))
        if any(np.max(np.abs(arr_idx - t)) <= min_separation for t in taken):
            continue
        index = tuple(int(i + lo) for i, lo in zip(arr_idx, disc.n_lo))
        peaks.append(Peak(index, disc.cell_center(index), float(flat[pos])))
        taken.append(arr_idx)
        if len(peaks) == k:
            break
    return peaks


def column_sum_is_unit(fam: SolvableFamily, x, prefix, disc: Discretization) -> int:
    """Sum of the kernel over all cells of one prefix column (0 or 1)."""
    lam_t = disc.centers(disc.t - 1)
    return sum(kernel(fam, x, tuple(prefix) + (float(v),), disc) for v in lam_t)


__all__ = [
    "HoughCounter", "Peak", "UnsupportedFamilyError", "kernel", "target_index",
    "accumulate_discrete", "accumulate_pixel", "rescale", "detect_peaks", "column_sum_is_unit",
]
