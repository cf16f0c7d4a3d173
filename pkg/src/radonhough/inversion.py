"""Noisy-sinogram reconstruction: back-projection, filtered back-projection and Hough-threshold inversion.

All reconstructions work on a ``(theta, gamma)`` sinogram with ``theta`` in
``[0, pi)`` and write a :class:`PixelImage` over a square window. Pixel
blocks are processed independently, so results do not depend on the number
of threads.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .images import PixelImage
from .radon import Sinogram, map_columns

NOISE_GENERATOR = "PCG64 uniforms -> inverse normal CDF (scipy.special.ndtri)"
RASTERIZATION = "supercover (every pixel whose closed square meets the line)"
DEFAULT_WINDOW = (-1.0, 1.0, -1.0, 1.0)
_ROW_BLOCK = 16
# relative slack (in pixel sides) so that lines through pixel corners count as touching
_CONTACT = 1e-12


@dataclass(frozen=True)
class NoiseSpec:
    level: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (self.level >= 0 and math.isfinite(self.level)):
            raise ValueError(f"noise level must be a finite non-negative number, got {self.level}")


def standard_normals(seed: int, size: int) -> np.ndarray:
    """``size`` standard normal variates from a PCG64 stream, by inversion.

    Each 53-bit uniform ``k / 2^53`` is shifted to the midpoint
    ``(k + 1/2) / 2^53`` so that the inverse CDF is always finite.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random(size) + 2.0 ** -54
    return ndtri(u)


def add_noise(s: Sinogram, spec: NoiseSpec) -> Sinogram:
    """Multiplicative Gaussian noise ``S_n = S_t (1 + level * eps)``, drawn in row-major order."""
    eps = standard_normals(spec.seed, s.values.size).reshape(s.values.shape)
    return s.with_values(s.values * (1.0 + spec.level * eps) + 0.0, "noisy")


# -- filters ------------------------------------------------------------------------


class FilterKind(enum.Enum):
    NONE = "none"
    RAMLAK = "ramlak"
    SHEPPLOGAN = "shepplogan"
    COSINE = "cosine"
    HAMMING = "hamming"
    HANN = "hann"

    @classmethod
    def parse(cls, name) -> "FilterKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown filter {name!r}; choose from {[k.value for k in cls]}") from None


FBP_FILTERS = (FilterKind.RAMLAK, FilterKind.SHEPPLOGAN, FilterKind.COSINE, FilterKind.HAMMING, FilterKind.HANN)


def hamming_window(nu, nu_nyquist: float, alpha: float = 0.54) -> np.ndarray:
    """Generalized Hamming window ``alpha + (1 - alpha) cos(pi nu / nu_N)``; ``alpha = 0.5`` is Hann."""
    return alpha + (1.0 - alpha) * np.cos(np.pi * np.asarray(nu, dtype=float) / nu_nyquist)


def window(kind, nu, nu_nyquist: float) -> np.ndarray:
    """Apodization ``w(nu)`` multiplying the ramp ``|nu|``."""
    kind = FilterKind.parse(kind)
    nu = np.asarray(nu, dtype=float)
    if kind is FilterKind.RAMLAK:
        return np.ones_like(nu)
    if kind is FilterKind.SHEPPLOGAN:
        return np.sinc(nu / (2 * nu_nyquist))
    if kind is FilterKind.COSINE:
        return np.cos(np.pi * nu / (2 * nu_nyquist))
    if kind is FilterKind.HAMMING:
        return hamming_window(nu, nu_nyquist, 0.54)
    if kind is FilterKind.HANN:
        return hamming_window(nu, nu_nyquist, 0.5)
    raise ValueError("the unfiltered back-projection has no window")


def _check_grid(s: Sinogram):
    disc = s.disc
    if disc.t != 2:
        raise ValueError("reconstruction needs a two-dimensional (theta, gamma) sinogram")
    th = disc.centers(0)
    if th[0] < 0 or th[-1] >= math.pi:
        raise ValueError(f"angle centres must lie in [0, pi), got [{th[0]}, {th[-1]}]")


def ramp_filter(s: Sinogram, kind=FilterKind.RAMLAK, response=None) -> np.ndarray:
    """Filter every angle column of ``s`` along ``gamma`` with ``|nu| w(nu)``.

    Columns are zero-padded to the next power of two that is at least twice
    their length. ``response``, if given, replaces ``w`` and is called as
    ``response(nu, nu_nyquist)``.
    """
    _check_grid(s)
    values = np.asarray(s.values, dtype=float)
    if values.ndim != 2:
        raise ValueError("sinogram values must be two-dimensional")
    J = values.shape[1]
    d2 = s.disc.d[1]
    P = 1 << max(1, (2 * J - 1).bit_length())
    nu = np.fft.rfftfreq(P, d=d2)
    nyq = 1.0 / (2.0 * d2)
    w = response(nu, nyq) if response is not None else window(kind, nu, nyq)
    spec = np.fft.rfft(values, n=P, axis=1) * (np.abs(nu) * w)[None, :]
    return np.fft.irfft(spec, n=P, axis=1)[:, :J]


def _out_image(width: int, height: int | None, window_) -> PixelImage:
    height = width if height is None else height
    if width < 1 or height < 1:
        raise ValueError("output image dimensions must be positive")
    return PixelImage(np.zeros((height, width)), window_)


def _row_blocks(height: int):
    return [(r, min(r + _ROW_BLOCK, height)) for r in range(0, height, _ROW_BLOCK)]


def _backproject_values(values, s: Sinogram, out: PixelImage, threads: int) -> PixelImage:
    disc = s.disc
    thetas, gammas = disc.centers(0), disc.centers(1)
    cos, sin = np.cos(thetas), np.sin(thetas)
    xs, ys = out.x_centers(), out.y_centers()
    blocks = _row_blocks(out.height)

    def block(b):
        r0, r1 = blocks[b]
        X, Y = np.meshgrid(xs, ys[r0:r1])
        acc = np.zeros(X.shape)
        for i in range(len(thetas)):
            acc += np.interp(X * cos[i] + Y * sin[i], gammas, values[i], left=0.0, right=0.0)
        return acc * disc.d[0]

    parts = map_columns(block, len(blocks), threads)
    return PixelImage(np.vstack(parts), out.window)


def backproject(s: Sinogram, width: int = 256, height: int | None = None,
                window_=DEFAULT_WINDOW, threads: int = 1) -> PixelImage:
    """Unfiltered back-projection ``sum_i s(theta_i, x . n_i) d_theta``.

    Offsets are linearly interpolated between samples; offsets outside the
    sampled range contribute nothing.
    """
    _check_grid(s)
    return _backproject_values(s.values, s, _out_image(width, height, window_), threads)


def fbp(s: Sinogram, kind=FilterKind.RAMLAK, width: int = 256, height: int | None = None,
        window_=DEFAULT_WINDOW, threads: int = 1, response=None) -> PixelImage:
    """Filtered back-projection; ``kind=FilterKind.NONE`` is plain back-projection."""
    kind = FilterKind.parse(kind)
    if kind is FilterKind.NONE and response is None:
        return backproject(s, width, height, window_, threads)
    filtered = ramp_filter(s, kind, response)
    return _backproject_values(filtered, s, _out_image(width, height, window_), threads)


# -- Hough-threshold inversion -------------------------------------------------------


def supercover(theta: float, gamma: float, img: PixelImage) -> list[tuple[int, int]]:
    """Pixels ``(row, col)`` met by the line ``x1 cos(theta) + x2 sin(theta) = gamma``.

    Walks the pixel columns (or rows, for steep lines) and lists every pixel
    whose closed square the line touches, each once. Contacts are decided
    with a slack of ``1e-12`` pixel sides, so corner contacts survive rounding.
    """
    c, s = math.cos(theta), math.sin(theta)
    side = 2 * img.half_side
    eps = _CONTACT * side
    x0, x1, y0, y1 = img.window
    out = []
    if abs(s) >= abs(c):
        # x2 = (gamma - x1 c) / s is monotone in x1: take its range over each column
        for col in range(img.width):
            xa, xb = x0 + col * side, x0 + (col + 1) * side
            ya, yb = sorted(((gamma - xa * c) / s, (gamma - xb * c) / s))
            r_lo = max(0, math.ceil((y1 - yb) / side) - 2)
            r_hi = min(img.height - 1, math.floor((y1 - ya) / side) + 1)
            out.extend((r, col) for r in range(r_lo, r_hi + 1)
                       if y1 - (r + 1) * side <= yb + eps and ya - eps <= y1 - r * side)
    else:
        for row in range(img.height):
            ya, yb = y1 - (row + 1) * side, y1 - row * side
            xa, xb = sorted(((gamma - ya * s) / c, (gamma - yb * s) / c))
            c_lo = max(0, math.ceil((xa - x0) / side) - 2)
            c_hi = min(img.width - 1, math.floor((xb - x0) / side) + 1)
            out.extend((row, k) for k in range(c_lo, c_hi + 1)
                       if x0 + k * side <= xb + eps and xa - eps <= x0 + (k + 1) * side)
    return sorted(out)


def selected_cells(s: Sinogram, threshold: float) -> np.ndarray:
    """Mask of cells traced at ``threshold``: ``d2 S >= threshold * max(d2 S)``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold fraction must be in [0, 1], got {threshold}")
    w = s.disc.d[1] * np.asarray(s.values)
    return w >= threshold * float(w.max())


def hough_invert(s: Sinogram, threshold: float, width: int = 256, height: int | None = None,
                 window_=DEFAULT_WINDOW, threads: int = 1) -> PixelImage:
    """Trace every selected cell's line back into the image, adding ``d2 S`` to each pixel it meets.

    A pixel centred at ``p`` with half side ``a`` meets the line of cell
    ``(theta, gamma_j)`` iff ``|gamma_j - p . n| <= a (|cos| + |sin|)``, so
    per angle its increment is a difference of prefix sums over ``j``. The
    result equals explicit supercover tracing of each line.
    """
    _check_grid(s)
    out = _out_image(width, height, window_)
    disc = s.disc
    thetas, gammas = disc.centers(0), disc.centers(1)
    g0, d2 = gammas[0], disc.d[1]
    J = len(gammas)
    w = np.where(selected_cells(s, threshold), d2 * np.asarray(s.values), 0.0)
    active = np.flatnonzero(np.any(w != 0, axis=1))
    prefix = np.concatenate([np.zeros((len(thetas), 1)), np.cumsum(w, axis=1)], axis=1)
    a = out.half_side
    xs, ys = out.x_centers(), out.y_centers()
    blocks = _row_blocks(out.height)

    def block(b):
        r0, r1 = blocks[b]
        X, Y = np.meshgrid(xs, ys[r0:r1])
        acc = np.zeros(X.shape)
        for i in active:
            c, sn = math.cos(thetas[i]), math.sin(thetas[i])
            p = X * c + Y * sn
            reach = a * (abs(c) + abs(sn)) + _CONTACT * 2 * a
            j_lo = np.clip(np.ceil((p - reach - g0) / d2), 0, J).astype(np.int64)
            j_hi = np.clip(np.floor((p + reach - g0) / d2) + 1, 0, J).astype(np.int64)
            acc += np.where(j_hi > j_lo, prefix[i, j_hi] - prefix[i, j_lo], 0.0)
        return acc

    parts = map_columns(block, len(blocks), threads)
    return PixelImage(np.vstack(parts), out.window)


def hough_invert_traced(s: Sinogram, threshold: float, width: int, height: int | None = None,
                        window_=DEFAULT_WINDOW) -> PixelImage:
    """Line-by-line reference for :func:`hough_invert` using :func:`supercover` (slow)."""
    _check_grid(s)
    out = _out_image(width, height, window_)
    acc = np.zeros(out.values.shape)
    thetas, gammas = s.disc.centers(0), s.disc.centers(1)
    sel = selected_cells(s, threshold)
    for i, j in zip(*np.nonzero(sel)):
        inc = s.disc.d[1] * s.values[i, j]
        for r, c in supercover(thetas[i], gammas[j], out):
            acc[r, c] += inc
    return PixelImage(acc, out.window)


# -- evaluation ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorReport:
    method: str
    error: float
    threshold: float | None = None
    seed: int | None = None
    lo: float = 0.0
    hi: float = 0.0
    degenerate: bool = False

    CSV_HEADER = "method,threshold,seed,error,rescale_min,rescale_max,degenerate"

    def csv_row(self) -> str:
        thr = "" if self.threshold is None else repr(float(self.threshold))
        seed = "" if self.seed is None else str(self.seed)
        return (f"{self.method},{thr},{seed},{self.error!r},{self.lo!r},{self.hi!r},"
                f"{int(self.degenerate)}")


def evaluate(recon, truth, mask=None, method: str = "", threshold=None, seed=None) -> ErrorReport:
    """Frobenius error over the masked-in pixels after min-max rescaling ``recon`` to ``[0, 1]``.

    The rescale uses the minimum and maximum over the masked-in pixels only.
    A constant reconstruction is mapped to zeros and flagged as degenerate.
    """
    r = np.asarray(getattr(recon, "values", recon), dtype=float)
    t = np.asarray(getattr(truth, "values", truth), dtype=float)
    if r.shape != t.shape:
        raise ValueError(f"reconstruction {r.shape} and truth {t.shape} differ in shape")
    m = np.ones(r.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if m.shape != r.shape:
        raise ValueError("mask shape differs from the image shape")
    if not m.any():
        raise ValueError("mask selects no pixels")
    lo, hi = float(r[m].min()), float(r[m].max())
    degenerate = not hi > lo
    scaled = np.zeros(int(m.sum())) if degenerate else (r[m] - lo) / (hi - lo)
    err = float(np.sqrt(np.sum((scaled - t[m]) ** 2)))
    thr = None if threshold is None else float(threshold)
    return ErrorReport(method, err, thr, seed, lo, hi, degenerate)


def threshold_sweep(clean: Sinogram, truth: PixelImage, thresholds, seeds, level: float = 1.0,
                    mask=None, threads: int = 1) -> list[ErrorReport]:
    """Error reports for every seed: back-projection, the five FBP filters, then each threshold.

    ``clean`` is the noise-free sinogram; every seed draws its own noise
    realization at ``level``.
    """
    thresholds = [float(t) for t in thresholds]
    for thr in thresholds:
        if not 0.0 <= thr <= 1.0:
            raise ValueError(f"threshold fraction must be in [0, 1], got {thr}")
    h, w = truth.values.shape
    reports = []
    for seed in seeds:
        noisy = add_noise(clean, NoiseSpec(level, int(seed)))
        for kind in (FilterKind.NONE,) + FBP_FILTERS:
            recon = fbp(noisy, kind, w, h, truth.window, threads)
            reports.append(evaluate(recon, truth, mask, kind.value if kind is not FilterKind.NONE else "bp",
                                    seed=int(seed)))
        for thr in thresholds:
            recon = hough_invert(noisy, thr, w, h, truth.window, threads)
            reports.append(evaluate(recon, truth, mask, "hough", thr, int(seed)))
    return reports


def optimal_threshold(reports, seed) -> ErrorReport:
    """Hough report with the smallest error for ``seed`` (first one on ties)."""
    rows = [r for r in reports if r.method == "hough" and r.seed == seed]
    if not rows:
        raise ValueError(f"no Hough reports for seed {seed}")
    return min(rows, key=lambda r: r.error)
