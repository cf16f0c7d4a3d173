"""Forward transforms: exact Radon transform of square pixels, quadrature Radon
transform along graph-parametrized loci, the charge function and the 1-D
Dirac pairing.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .families import SolvableFamily
from .grid import Discretization
from .images import PixelImage

# below this |sin(theta)| the slope form is abandoned for the axis-parallel chord
SIN_EPS = 1e-6
# below this |omega_1| the single-expression form loses digits to cancellation
_SLOPE_CANCEL = 1e-3

PROVENANCES = ("radon-exact", "radon-numeric", "hough-rescaled", "noisy")


class SingularLocusError(ValueError):
    """The gradient of ``f`` vanishes on the integration locus."""


class NonSimpleZeroError(ValueError):
    """A zero of ``f`` is not simple, so ``delta(f)`` is undefined there."""


@dataclass(frozen=True)
class Sinogram:
    disc: Discretization
    values: np.ndarray
    provenance: str = "radon-exact"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.disc.shape:
            raise ValueError(f"values of shape {v.shape} do not match grid shape {self.disc.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("sinogram values must be finite")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "values", v)

    def with_values(self, values, provenance=None) -> "Sinogram":
        return Sinogram(self.disc, values, provenance or self.provenance)


def map_columns(fn, n: int, threads: int = 1) -> list:
    """``[fn(i) for i in range(n)]``, optionally on a thread pool; order is preserved."""
    if threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


# -- single square pixel ------------------------------------------------------


def _chord_extent(a, w, g):
    """x1-extent of the line ``x2 = g - w x1`` inside ``[-a, a]^2`` by interval intersection."""
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    g = np.asarray(g, dtype=float)
    flat = w == 0
    w_safe = np.where(flat, 1.0, w)
    p = (g - a) / w_safe
    q = (g + a) / w_safe
    lo = np.maximum(-a, np.minimum(p, q))
    hi = np.minimum(a, np.maximum(p, q))
    tilted = np.maximum(hi - lo, 0.0)
    return np.where(flat, np.where(np.abs(g) <= a, 2 * a, 0.0), tilted)


def _slope_form(a, w, g):
    w = np.asarray(w, dtype=float)
    g = np.asarray(g, dtype=float)
    small = np.abs(w) < _SLOPE_CANCEL
    ws = np.where(small, 1.0, w)
    aw = a * ws
    closed = (np.abs(a - aw - g) + np.abs(a - aw + g) - np.abs(a + aw - g) - np.abs(a + aw + g)) / (-2 * ws)
    return np.where(small, _chord_extent(a, w, g), closed) + 0.0


def radon_square_slope(a, omega1, gamma):
    """Radon transform of the indicator of ``[-a, a]^2`` along ``gamma - omega1 x1 - x2 = 0``.

    Returns the x1-extent of the chord,
    ``(|a - a w - g| + |a - a w + g| - |a + a w - g| - |a + a w + g|) / (-2 w)``.
    For ``|omega1| < 1e-3`` the same quantity is evaluated by interval
    intersection, which avoids the cancellation in the expression.
    """
    if np.any(np.asarray(a) <= 0):
        raise ValueError("half-side a must be positive")
    if np.any(np.asarray(omega1) == 0):
        raise ValueError("omega1 = 0 is singular for the slope form; use radon_square_angle")
    out = _slope_form(a, omega1, gamma)
    return float(out) if np.ndim(out) == 0 else out


def radon_square_angle(a, center, theta, gamma):
    """Unit-gradient Radon transform of a square pixel along ``gamma - x . (cos t, sin t) = 0``.

    ``center`` is ``(cx, cy)``; all arguments broadcast. The value is the
    chord length of the line through the square, obtained from the slope
    form with ``omega1 = cot(theta)``, ``gamma -> gamma / sin(theta)`` and a
    ``1 / |sin(theta)|`` factor. Near-vertical lines (``|sin| < 1e-6``) use
    the axis-parallel chord directly.
    """
    if np.any(np.asarray(a) <= 0):
        raise ValueError("half-side a must be positive")
    cx, cy = (np.asarray(v, dtype=float) for v in center)
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    g = np.asarray(gamma, dtype=float) - cx * c - cy * s
    regular = np.abs(s) >= SIN_EPS
    s_safe = np.where(regular, s, 1.0)
    tilted = _slope_form(a, c / s_safe, g / s_safe) / np.abs(s_safe)
    c_safe = np.where(regular, 1.0, np.abs(c))
    vertical = np.where(np.abs(g) <= a * c_safe, 2 * a / c_safe, 0.0)
    out = np.where(regular, tilted, vertical)
    return float(out) if np.ndim(out) == 0 else out


def radon_square_omega(a, center, omega, gamma):
    """Radon transform of a square pixel for the un-normalized line ``gamma - omega . x = 0``.

    Satisfies ``R(c omega, c gamma) = R(omega, gamma) / |c|``; ``R(0, gamma) = 0``.
    """
    cx, cy = (np.asarray(v, dtype=float) for v in center)
    w1, w2 = (np.asarray(v, dtype=float) for v in omega)
    g = np.asarray(gamma, dtype=float) - w1 * cx - w2 * cy
    # the square is symmetric in x1 <-> x2, so divide by the larger component
    use2 = np.abs(w2) >= np.abs(w1)
    big = np.where(use2, w2, w1)
    small = np.where(use2, w1, w2)
    zero = big == 0
    big_safe = np.where(zero, 1.0, big)
    val = _slope_form(a, small / big_safe, g / big_safe) / np.abs(big_safe)
    out = np.where(zero, 0.0, val)
    return float(out) if np.ndim(out) == 0 else out


# -- square-pixel images ---------------------------------------------------------


def radon_pixel_angle(img: PixelImage, theta, gamma):
    """Exact unit-gradient Radon transform of a pixel image at arbitrary ``(theta, gamma)``."""
    X, Y, V = img.nonzero_pixels()
    theta = np.asarray(theta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    shape = np.broadcast_shapes(theta.shape, gamma.shape)
    th = np.broadcast_to(theta, shape).ravel()
    ga = np.broadcast_to(gamma, shape).ravel()
    out = np.array([
        float(np.sum(V * radon_square_angle(img.half_side, (X, Y), t, g))) for t, g in zip(th, ga)
    ])
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def radon_pixel_omega(img: PixelImage, omega, gamma) -> float:
    """Exact Radon transform of a pixel image along ``gamma - omega . x = 0`` (omega not normalized)."""
    X, Y, V = img.nonzero_pixels()
    return float(np.sum(V * radon_square_omega(img.half_side, (X, Y), omega, gamma)))


def index_ranges(lo, hi):
    """Expand per-item index ranges ``lo[k] <= j < hi[k]`` into flat ``(item, j)`` pairs."""
    lo = np.asarray(lo, dtype=np.int64)
    counts = np.maximum(np.asarray(hi, dtype=np.int64) - lo, 0)
    item = np.repeat(np.arange(len(lo)), counts)
    starts = np.cumsum(counts) - counts
    j = lo[item] + np.arange(item.size) - starts[item]
    return item, j


def _sinogram_column(X, Y, V, a, theta, gammas):
    J = len(gammas)
    g0, dg = gammas[0], gammas[1] - gammas[0] if J > 1 else 1.0
    c, s = math.cos(theta), math.sin(theta)
    proj = X * c + Y * s
    w = a * (abs(c) + abs(s))
    # slightly widened so that lines along a pixel edge are not lost to rounding
    j_lo = np.maximum(np.ceil((proj - w - g0) / dg - 1e-9).astype(np.int64), 0)
    j_hi = np.minimum(np.floor((proj + w - g0) / dg + 1e-9).astype(np.int64) + 1, J)
    k, j = index_ranges(j_lo, j_hi)
    vals = V[k] * radon_square_angle(a, (X[k], Y[k]), theta, gammas[j])
    return np.bincount(j, weights=vals, minlength=J)


def sinogram_pixel(img: PixelImage, disc: Discretization, normalization: str = "unit-gradient",
                   threads: int = 1) -> Sinogram:
    """Exact sinogram of a pixel image on a ``(theta, gamma)`` grid.

    Each pixel contributes its closed-form chord length only to the few
    offsets its projection can reach. ``normalization="slope"`` returns the
    raw slope-form values, i.e. the unit-gradient ones times ``|sin(theta)|``.
    """
    if disc.t != 2:
        raise ValueError("sinogram_pixel needs a two-dimensional (theta, gamma) grid")
    if normalization not in ("unit-gradient", "slope"):
        raise ValueError(f"unknown normalization {normalization!r}")
    X, Y, V = img.nonzero_pixels()
    thetas = disc.centers(0)
    gammas = disc.centers(1)
    a = img.half_side
    cols = map_columns(lambda i: _sinogram_column(X, Y, V, a, thetas[i], gammas), len(thetas), threads)
    values = np.array(cols).reshape(disc.shape)
    if normalization == "slope":
        values = values * np.abs(np.sin(thetas))[:, None]
    return Sinogram(disc, values, "radon-exact")


# -- half-planes and strips --------------------------------------------------------


def _sum_uniform_cdf(z, u, v):
    """CDF at ``z`` of ``U[-u, u] + U[-v, v]`` (independent), written without cancellation."""
    z = np.asarray(z, dtype=float)
    U = np.maximum(u, v)
    V = np.minimum(u, v)
    U_safe = np.where(U > 0, U, 1.0)
    V_safe = np.where(V > 0, V, 1.0)
    lin = np.clip((z + U) / (2 * U_safe), 0.0, 1.0)
    with np.errstate(over="ignore"):  # unused branches may overflow when V is tiny
        quad_lo = (z + U + V) ** 2 / (8 * U_safe * V_safe)
        quad_hi = 1.0 - (U + V - z) ** 2 / (8 * U_safe * V_safe)
    smooth = np.select(
        [z <= -U - V, z < -U + V, z <= U - V, z < U + V],
        [0.0, quad_lo, lin, quad_hi],
        default=1.0,
    )
    out = np.where(V > 0, smooth, lin)
    return np.where(U > 0, out, (z >= 0).astype(float))


def half_plane_area(a, center, omega, level):
    """Area of ``{x in square(center, a) : omega . x <= level}``."""
    cx, cy = (np.asarray(v, dtype=float) for v in center)
    w1, w2 = float(omega[0]), float(omega[1])
    z = np.asarray(level, dtype=float) - (w1 * cx + w2 * cy)
    return 4 * a * a * _sum_uniform_cdf(z, a * abs(w1), a * abs(w2))


def charge(fam: SolvableFamily, m: PixelImage, lam_prime, lam_t: float, samples: int = 16) -> float:
    """Mass of ``m`` in the sublevel region ``{x : F(x; lam') <= lam_t}``.

    Families affine in ``x`` are handled exactly, pixel by pixel, with
    closed-form half-plane areas. Other families use the midpoint rule on a
    ``samples x samples`` sub-grid of every pixel.
    """
    lam_prime = np.atleast_1d(np.asarray(lam_prime, dtype=float))
    X, Y, V = m.nonzero_pixels()
    a = m.half_side
    if fam.linear is not None:
        omega, offset = fam.linear(lam_prime)
        return float(np.sum(V * half_plane_area(a, (X, Y), omega, lam_t - offset)))
    off = -a + (2 * np.arange(samples) + 1) * a / samples
    ox, oy = np.meshgrid(off, off)
    pts = np.stack([X[:, None] + ox.ravel()[None, :], Y[:, None] + oy.ravel()[None, :]], axis=-1)
    inside = fam.F(pts, lam_prime) <= lam_t
    return float(np.sum(V[:, None] * inside) * (2 * a / samples) ** 2)


# -- quadrature Radon transform --------------------------------------------------------


def _pixel_ids(m: PixelImage, branch, u):
    p = branch.points(u)
    return m.pixel_index(p[..., 0], p[..., 1])


def _breakpoints(ids_at, l, r, idl, idr, bisections: int = 64, passes: int = 16):
    """Parameter values where the pixel under the curve changes, located by bisection."""
    found = []
    for _ in range(passes):
        if l.size == 0:
            break
        lo, hi = l.copy(), r.copy()
        for _ in range(bisections):
            mid = 0.5 * (lo + hi)
            same = ids_at(mid) == idl
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        found.append(hi)
        idh = ids_at(hi)
        more = (idh != idr) & (hi < r)
        l, r, idl, idr = hi[more], r[more], idh[more], idr[more]
    return np.concatenate(found) if found else np.empty(0)


def radon_numeric(fam: SolvableFamily, m: PixelImage, lam, samples: int = 2048) -> float:
    """Generalized Radon transform of a pixel image by quadrature along ``S(lam)``.

    Every graph branch ``x_other = g(u)`` of the zero locus is integrated over
    the window with the composite midpoint rule on ``samples`` panels; panels
    are split where the curve crosses a pixel boundary, so the piecewise
    constant image never jumps inside a panel. The integrand is
    ``m * sqrt(1 + g'^2) / |grad_x f|``.
    """
    if fam.graphs is None:
        raise TypeError(f"family {fam.name} has no graph parametrization")
    lam = np.asarray(lam, dtype=float)
    x0, x1, y0, y1 = m.window
    total = 0.0
    for br in fam.graphs(lam):
        wlo, whi = (x0, x1) if br.axis == 0 else (y0, y1)
        lo, hi = max(br.interval[0], wlo), min(br.interval[1], whi)
        if not hi > lo:
            continue
        # a branch can end at a vertical tangent, where g' ~ 1/sqrt(u - end);
        # flattening the map s -> u at such ends makes the integrand bounded
        u_of, du = _endpoint_map(lo, hi, lo == br.interval[0], hi == br.interval[1])

        def ids_at(s, br=br, u_of=u_of):
            return _pixel_ids(m, br, u_of(s))

        s_nodes = np.linspace(0.0, 1.0, samples + 1)
        ids = ids_at(s_nodes)
        chg = ids[:-1] != ids[1:]
        bps = _breakpoints(ids_at, s_nodes[:-1][chg], s_nodes[1:][chg], ids[:-1][chg], ids[1:][chg])
        nodes = np.unique(np.concatenate([s_nodes, bps]))
        mid = 0.5 * (nodes[:-1] + nodes[1:])
        u = u_of(mid)
        pts = br.points(u)
        vals = m.value_at(pts[:, 0], pts[:, 1])
        grad = np.linalg.norm(fam.grad_x_f(pts, np.broadcast_to(lam, pts.shape[:-1] + lam.shape)), axis=-1)
        if np.any(grad < 1e-12):
            raise SingularLocusError(f"|grad_x f| vanishes on S({lam.tolist()})")
        weight = np.sqrt(1.0 + br.dg(u) ** 2) / grad * du(mid)
        total += float(np.sum(np.diff(nodes) * vals * weight))
    return total


def _endpoint_map(lo, hi, flat_lo, flat_hi):
    """Map ``[0, 1] -> [lo, hi]`` with zero slope at the requested ends, and its derivative."""
    L = hi - lo
    if flat_lo and flat_hi:
        return (lambda s: lo + L * s * s * (3 - 2 * s)), (lambda s: 6 * L * s * (1 - s))
    if flat_lo:
        return (lambda s: lo + L * s * s), (lambda s: 2 * L * s)
    if flat_hi:
        return (lambda s: hi - L * (1 - s) ** 2), (lambda s: 2 * L * (1 - s))
    return (lambda s: lo + L * s), (lambda s: np.full_like(s, L))


# -- one-dimensional delta of a function ---------------------------------------------


def dirac_pair_1d(f, fprime, phi, interval, n_brackets: int = 1024, xtol: float = 1e-12) -> float:
    """``<delta(f), phi> = sum_i phi(x_i) / |f'(x_i)|`` over the zeros of ``f`` in ``interval``.

    Zeros are bracketed on a uniform grid of ``n_brackets`` intervals and
    refined with Brent's method. A zero with ``|f'| < 1e-9`` is not simple
    and raises :class:`NonSimpleZeroError`.
    """
    lo, hi = interval
    x = np.linspace(lo, hi, n_brackets + 1)
    fx = np.array([f(v) for v in x], dtype=float)
    roots = [x[k] for k in range(1, n_brackets) if fx[k] == 0.0]
    for k in range(n_brackets):
        if fx[k] * fx[k + 1] < 0:
            roots.append(brentq(f, x[k], x[k + 1], xtol=xtol))
    total = 0.0
    for r in sorted(roots):
        slope = abs(fprime(r))
        if slope < 1e-9:
            raise NonSimpleZeroError(f"zero at {r} is not simple (|f'| = {slope:g})")
        total += phi(r) / slope
    return total
