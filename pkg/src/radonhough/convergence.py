"""Weak convergence of the rescaled Hough counter to the generalized Radon transform.

Both sides are paired with a compactly supported C^1 test function ``psi``
on the parameter space. For a point set the Radon side reduces to
``sum_j mu_j * integral psi(lam', F(x_j; lam')) dlam'``; for a pixel image it
is a Riemann sum of the exact sinogram on a finer grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .families import SolvableFamily
from .grid import Discretization
from .hough import accumulate_discrete, accumulate_pixel, rescale
from .images import DiscreteImage, PixelImage
from .radon import _sinogram_column

BUMP_1D_INTEGRAL = 16.0 / 15.0


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class TestFunction:
    """Product bump ``prod_k max(0, 1 - ((lam_k - c_k) / r_k)^2)^2``."""

    __test__ = False  # not a pytest class

    center: tuple[float, ...]
    radius: tuple[float, ...]

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        u = (lam - np.asarray(self.center)) / np.asarray(self.radius)
        return np.prod(np.maximum(0.0, 1.0 - u * u) ** 2, axis=-1)

    def gradient(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        r = np.asarray(self.radius)
        u = (lam - np.asarray(self.center)) / r
        fac = np.maximum(0.0, 1.0 - u * u)
        out = np.empty(lam.shape)
        for k in range(lam.shape[-1]):
            others = np.prod(np.delete(fac, k, axis=-1) ** 2, axis=-1)
            out[..., k] = -4 * u[..., k] * fac[..., k] / r[k] * others
        return out

    @property
    def t(self) -> int:
        return len(self.center)

    def support(self) -> list[tuple[float, float]]:
        return [(c - r, c + r) for c, r in zip(self.center, self.radius)]

    def integral(self) -> float:
        return float(np.prod([BUMP_1D_INTEGRAL * r for r in self.radius]))


def bump(center: Sequence[float], radius: Sequence[float], domain=None) -> TestFunction:
    """C^1 polynomial bump; ``domain`` (a grid or a box) must contain its support."""
    center = tuple(float(c) for c in center)
    radius = tuple(float(r) for r in radius)
    if len(center) != len(radius) or any(r <= 0 for r in radius):
        raise ValueError("center and radius must have equal length and positive radii")
    psi = TestFunction(center, radius)
    if domain is not None:
        box = domain.box() if isinstance(domain, Discretization) else domain
        for (lo, hi), (slo, shi) in zip(box, psi.support()):
            if slo < lo or shi > hi:
                raise ValueError(f"bump support {psi.support()} leaves the domain {box}")
    return psi


def pair_grid(s, psi: Callable) -> float:
    """Riemann sum ``sum_cells value * psi(centre) * prod(d)``."""
    disc = s.disc
    centers = disc.center_grid()
    return float(np.sum(np.asarray(s.values) * psi(centers)) * disc.cell_volume)


def _midpoint(fn, lo, hi, n):
    h = (hi - lo) / n
    return h * float(np.sum(fn(lo + (np.arange(n) + 0.5) * h)))


def pair_radon_discrete(fam: SolvableFamily, img: DiscreteImage, psi: TestFunction,
                        tol: float = 1e-12, max_panels: int = 1 << 22) -> float:
    """``<R_f m, psi>`` for a point set with ``t >= 2``.

    For each point the integral of ``psi`` along the graph
    ``lam_t = F(x_j; lam')`` over the support of ``psi`` in ``lam'`` is
    computed with the midpoint rule, doubling the panel count until two
    successive values agree within ``tol`` (relative to the integral scale).
    """
    if fam.t < 2:
        raise ValueError("use pair_radon_discrete_1d for t = 1")
    if fam.t != 2:
        return _pair_radon_discrete_nd(fam, img, psi, tol)
    lo, hi = psi.support()[0]
    total = 0.0
    for x, mu in zip(img.points, img.weights):
        def along(u, x=x):
            lp = u[:, None]
            return psi(np.column_stack([u, fam.F(x[None, :], lp)]))

        n = 64
        prev = _midpoint(along, lo, hi, n)
        while True:
            n *= 2
            cur = _midpoint(along, lo, hi, n)
            if abs(cur - prev) <= tol * max(1.0, abs(cur)):
                break
            if n >= max_panels:
                raise QuadratureError(f"midpoint rule did not converge (last change {abs(cur - prev):g})")
            prev = cur
        total += mu * cur
    return total


def _pair_radon_discrete_nd(fam, img, psi, tol, max_per_axis: int = 1 << 10):
    box = psi.support()[:-1]
    total = 0.0
    for x, mu in zip(img.points, img.weights):
        def integral(n):
            axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi in box]
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(box))
            lam = np.column_stack([grid, fam.F(x[None, :], grid)])
            return float(np.sum(psi(lam))) * np.prod([(hi - lo) / n for lo, hi in box])

        n = 16
        prev = integral(n)
        while True:
            n *= 2
            cur = integral(n)
            if abs(cur - prev) <= max(tol, 1e-9) * max(1.0, abs(cur)):
                break
            if n >= max_per_axis:
                raise QuadratureError("tensor midpoint rule did not converge")
            prev = cur
        total += mu * cur
    return total


def pair_radon_discrete_1d(fam: SolvableFamily, img: DiscreteImage, psi: TestFunction) -> float:
    """``sum_j mu_j psi(F(x_j))`` for a one-parameter family."""
    if fam.t != 1:
        raise ValueError("pair_radon_discrete_1d needs t = 1")
    F = fam.F(img.points, np.zeros((len(img), 0)))
    return float(np.sum(img.weights * psi(np.asarray(F)[:, None])))


@dataclass
class ConvergenceReport:
    rows: list[tuple[float, float, float, float]] = field(default_factory=list)
    slope: float = math.nan
    ratios: list[float] = field(default_factory=list)
    monotone: bool = False
    passed: bool = False
    gate: str = ""

    def to_csv(self) -> str:
        lines = ["D,hough_pairing,radon_pairing,error"]
        lines += [",".join(repr(float(v)) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def verdict(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        ratios = ",".join(f"{r:.3f}" for r in self.ratios)
        return (f"{state} slope={self.slope:.4f} monotone={self.monotone} ratios={ratios} "
                f"gate=[{self.gate}] (rate gate is an empirical proxy; the limit theorems state no rate)")


def loglog_slope(D, err) -> float:
    D = np.asarray(D, dtype=float)
    err = np.asarray(err, dtype=float)
    ok = err > 0
    if ok.sum() < 3:
        raise ValueError("fewer than three usable points for the slope fit")
    return float(np.polyfit(np.log(D[ok]), np.log(err[ok]), 1)[0])


def _hough_pairing(fam, img, psi, disc):
    if isinstance(img, DiscreteImage):
        counter = accumulate_discrete(fam, img, disc)
    else:
        counter = accumulate_pixel(fam, img, disc, "exact-strip")
    return pair_grid(rescale(counter), psi)


def _pixel_reference(fam, img, psi, disc, refine: int):
    """Riemann pairing of the exact sinogram on a ``refine``-times finer grid.

    Equivalent to ``pair_grid(sinogram_pixel(img, fine), psi)`` but built one
    angle at a time, so the fine sinogram is never held in memory.
    """
    if fam.name != "line-angle":
        raise ValueError("pixel-image reference pairing is implemented for the line-angle family")
    fine = Discretization.covering(disc.lambda_star, tuple(d / refine for d in disc.d), disc.box())
    X, Y, V = img.nonzero_pixels()
    thetas, gammas = fine.centers(0), fine.centers(1)
    (t_lo, t_hi), _ = psi.support()
    total = 0.0
    for theta in thetas[(thetas > t_lo) & (thetas < t_hi)]:
        col = _sinogram_column(X, Y, V, img.half_side, theta, gammas)
        nz = np.flatnonzero(col)
        lam = np.column_stack([np.full(len(nz), theta), gammas[nz]])
        total += float(np.sum(col[nz] * psi(lam)))
    return total * fine.cell_volume


def convergence_study(fam: SolvableFamily, img, psi: TestFunction, base: Discretization,
                      levels: int = 6, ratio_band: tuple[float, float] | None = (1.5, 3.0),
                      min_slope: float | None = None, refine: int = 4) -> ConvergenceReport:
    """Pair ``H / d_t`` and ``R_f m`` with ``psi`` on ``levels`` grids, halving every ``d_k``.

    The first grid is ``base``; each following one keeps ``lambda_star`` and
    the covered box. The report passes when the errors decrease strictly,
    every error ratio between consecutive levels lies in ``ratio_band`` (if
    given) and the log-log slope is at least ``min_slope`` (if given).
    """
    if levels < 4:
        raise ValueError("a convergence study needs at least four levels")
    report = ConvergenceReport()
    discrete = isinstance(img, DiscreteImage)
    if discrete:
        if fam.t == 1:
            reference = pair_radon_discrete_1d(fam, img, psi)
        else:
            reference = pair_radon_discrete(fam, img, psi)
    elif not isinstance(img, PixelImage):
        raise TypeError("img must be a DiscreteImage or a PixelImage")

    disc = base
    for level in range(levels):
        if level:
            disc = disc.scaled(0.5)
        bump(psi.center, psi.radius, disc)
        hough = _hough_pairing(fam, img, psi, disc)
        radon = reference if discrete else _pixel_reference(fam, img, psi, disc, refine)
        report.rows.append((disc.D, hough, radon, abs(hough - radon)))

    D = [r[0] for r in report.rows]
    err = [r[3] for r in report.rows]
    report.slope = loglog_slope(D, err)
    report.ratios = [e0 / e1 if e1 > 0 else math.inf for e0, e1 in zip(err, err[1:])]
    report.monotone = all(e1 < e0 for e0, e1 in zip(err, err[1:]))
    ok = report.monotone
    gates = ["monotone"]
    if ratio_band is not None:
        ok = ok and all(ratio_band[0] <= r <= ratio_band[1] for r in report.ratios)
        gates.append(f"ratio in [{ratio_band[0]}, {ratio_band[1]}]")
    if min_slope is not None:
        ok = ok and report.slope >= min_slope
        gates.append(f"slope >= {min_slope}")
    report.passed = ok
    report.gate = ", ".join(gates)
    return report


