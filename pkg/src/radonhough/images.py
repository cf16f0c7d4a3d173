"""Image models: weighted point sets, square-pixel images and the Shepp-Logan phantom."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class DiscreteImage:
    """Weighted point set ``sum_j mu_j delta(x - x_j)``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if pts.shape[0] < 1:
            raise ValueError("a discrete image needs at least one point")
        if w.shape != (pts.shape[0],):
            raise ValueError(f"{pts.shape[0]} points but weights of shape {w.shape}")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValueError("points and weights must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def unit(cls, points) -> "DiscreteImage":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts, np.ones(len(pts)))

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class PixelImage:
    """Piecewise-constant image made of square pixels.

    ``values[i, j]`` is the pixel in row ``i`` (top row first, i.e. largest
    ``x2``) and column ``j`` (smallest ``x1`` first). ``window`` is
    ``(x_min, x_max, y_min, y_max)``.
    """

    values: np.ndarray
    window: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise ValueError("pixel values must be a non-empty 2-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("pixel values must be finite")
        x0, x1, y0, y1 = (float(c) for c in self.window)
        h, w = v.shape
        sx, sy = (x1 - x0) / w, (y1 - y0) / h
        if sx <= 0 or sy <= 0 or not math.isclose(sx, sy, rel_tol=1e-9):
            raise ValueError(f"pixels must be square, got {sx} x {sy}")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "window", (x0, x1, y0, y1))

    @classmethod
    def on_square(cls, values, half_width: float = 1.0) -> "PixelImage":
        """Image centred at the origin whose larger side spans ``[-half_width, half_width]``."""
        v = np.asarray(values, dtype=float)
        h, w = v.shape
        side = 2.0 * half_width / max(h, w)
        return cls(v, (-w * side / 2, w * side / 2, -h * side / 2, h * side / 2))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def half_side(self) -> float:
        return (self.window[1] - self.window[0]) / (2 * self.width)

    @property
    def pixel_area(self) -> float:
        return (2 * self.half_side) ** 2

    def x_centers(self) -> np.ndarray:
        return self.window[0] + (np.arange(self.width) + 0.5) * 2 * self.half_side

    def y_centers(self) -> np.ndarray:
        return self.window[3] - (np.arange(self.height) + 0.5) * 2 * self.half_side

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrids ``(X, Y)`` of pixel centres, shaped like ``values``."""
        return np.meshgrid(self.x_centers(), self.y_centers())

    def mass(self) -> float:
        return float(self.values.sum() * self.pixel_area)

    def pixel_index(self, x, y) -> np.ndarray:
        """Flat pixel index of the points ``(x, y)``; -1 outside the window."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        side = 2 * self.half_side
        col = np.floor((x - self.window[0]) / side).astype(np.int64)
        row = np.floor((self.window[3] - y) / side).astype(np.int64)
        ok = (col >= 0) & (col < self.width) & (row >= 0) & (row < self.height)
        return np.where(ok, row * self.width + col, -1)

    def value_at(self, x, y) -> np.ndarray:
        idx = self.pixel_index(x, y)
        flat = self.values.ravel()
        return np.where(idx >= 0, flat[np.maximum(idx, 0)], 0.0)

    def nonzero_pixels(self):
        """Centres, values of the non-zero pixels, in row-major order."""
        X, Y = self.centers()
        mask = self.values != 0
        return X[mask], Y[mask], self.values[mask]


# -- Shepp-Logan ------------------------------------------------------------

# (intensity, semi-axis x1, semi-axis x2, centre x1, centre x2, rotation in degrees)
SHEPP_LOGAN_ORIGINAL = (
    (2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.01, 0.0230, 0.0230, 0.00, -0.6050, 0.0),
    (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)

# same geometry, contrast raised so that the grey levels span [0, 1]
SHEPP_LOGAN_MODIFIED = tuple(
    (v,) + row[1:]
    for v, row in zip((1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1), SHEPP_LOGAN_ORIGINAL)
)

PHANTOM_TABLES = {"modified": SHEPP_LOGAN_MODIFIED, "original": SHEPP_LOGAN_ORIGINAL}


def _inside_ellipse(X, Y, row) -> np.ndarray:
    _, ax, ay, cx, cy, deg = row
    phi = math.radians(deg)
    c, s = math.cos(phi), math.sin(phi)
    u = (X - cx) * c + (Y - cy) * s
    v = -(X - cx) * s + (Y - cy) * c
    return (u / ax) ** 2 + (v / ay) ** 2 <= 1.0


def phantom_value(x, y, table: str = "modified") -> np.ndarray:
    """Phantom grey level at arbitrary points, clamped to [0, 1]."""
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast_shapes(X.shape, Y.shape))
    for row in PHANTOM_TABLES[table]:
        out = out + row[0] * _inside_ellipse(X, Y, row)
    return np.clip(out, 0.0, 1.0)


def shepp_logan(width: int = 256, height: int | None = None, table: str = "modified") -> PixelImage:
    """Shepp-Logan phantom sampled at pixel centres on ``[-1, 1]^2``.

    ``table="original"`` uses the 1974 intensities; ``"modified"`` keeps the
    geometry with higher contrast. Either way the summed intensity is
    clamped to ``[0, 1]`` and the background is exactly zero.
    """
    height = width if height is None else height
    if width < 1 or height < 1:
        raise ValueError("phantom dimensions must be positive")
    if table not in PHANTOM_TABLES:
        raise ValueError(f"unknown phantom table {table!r}")
    img = PixelImage.on_square(np.zeros((height, width)))
    X, Y = img.centers()
    return PixelImage(phantom_value(X, Y, table), img.window)


def shepp_logan_mask(width: int = 256, height: int | None = None) -> np.ndarray:
    """Boolean mask of pixels whose centre lies inside the outer ellipse."""
    height = width if height is None else height
    img = PixelImage.on_square(np.zeros((height, width)))
    X, Y = img.centers()
    return _inside_ellipse(X, Y, SHEPP_LOGAN_ORIGINAL[0])


def disc_image(width: int, radius: float = 0.5, value: float = 1.0, height: int | None = None) -> PixelImage:
    height = width if height is None else height
    img = PixelImage.on_square(np.zeros((height, width)))
    X, Y = img.centers()
    return PixelImage(np.where(X ** 2 + Y ** 2 <= radius ** 2, value, 0.0), img.window)


def rasterize_points(img: DiscreteImage, width: int, height: int,
                     window=(-1.0, 1.0, -1.0, 1.0)) -> PixelImage:
    """Bin point weights into pixels (for looking at a point set, not for transforms)."""
    grid = PixelImage(np.zeros((height, width)), window)
    idx = grid.pixel_index(img.points[:, 0], img.points[:, 1])
    ok = idx >= 0
    flat = np.bincount(idx[ok], weights=img.weights[ok], minlength=width * height)
    return PixelImage(flat.reshape(height, width), grid.window)


# -- PGM ------------------------------------------------------------------------


def _pgm_tokens(data: bytes, count: int, start: int = 0):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos = [], start
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ValueError("truncated PGM header")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        end = pos
        while end < len(data) and not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    return tokens, pos


def load_pgm(path, window=None) -> PixelImage:
    """Read a P2 or P5 PGM (8 or 16 bit); grey levels are scaled to [0, 1]."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a PGM file (magic {magic!r})")
    try:
        (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise ValueError(f"{path}: malformed PGM header") from exc
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise ValueError(f"{path}: bad PGM dimensions or maxval")
    if magic == b"P5":
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[pos:pos + w * h * dtype.itemsize]
        if len(raw) != w * h * dtype.itemsize:
            raise ValueError(f"{path}: pixel data size mismatch")
        arr = np.frombuffer(raw, dtype=dtype).astype(float)
    else:
        toks = data[pos:].split()
        if len(toks) < w * h:
            raise ValueError(f"{path}: pixel data size mismatch")
        arr = np.array([int(t) for t in toks[:w * h]], dtype=float)
    values = arr.reshape(h, w) / maxval
    if window is None:
        return PixelImage.on_square(values)
    return PixelImage(values, window)


def save_pgm(img: PixelImage, path, maxval: int = 255, binary: bool = True, normalize: bool = False) -> None:
    """Write grey levels in [0, 1] (values outside are clipped).

    With ``normalize=True`` the values are min-max rescaled first.
    """
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in 1..65535")
    v = img.values
    if normalize:
        lo, hi = float(v.min()), float(v.max())
        v = (v - lo) / (hi - lo) if hi > lo else np.zeros_like(v)
    q = np.rint(np.clip(v, 0.0, 1.0) * maxval).astype(np.int64)
    h, w = q.shape
    header = f"{'P5' if binary else 'P2'}\n{w} {h}\n{maxval}\n".encode()
    if binary:
        body = q.astype(">u2" if maxval > 255 else "u1").tobytes()
    else:
        body = ("\n".join(" ".join(str(x) for x in row) for row in q) + "\n").encode()
    Path(path).write_bytes(header + body)
