"""Curve and surface families in the solvable form ``f(x; lam) = lam_t - F(x; lam')``.

A family carries its ``F`` and ``grad_x F`` as vectorized callables. Points
``x`` have shape ``(..., n)`` and prefixes ``lam'`` have shape ``(..., t-1)``;
both broadcast against each other.

Families that are affine in ``x`` (lines, hyperplanes) also expose
``linear(lam') -> (omega, offset)`` with ``F(x; lam') = omega . x + offset``,
which unlocks the closed-form strip and half-plane computations.

Optional ``graphs(lam)`` returns the zero locus ``S(lam)`` as a list of
:class:`GraphBranch` objects, used by the quadrature Radon transform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class DomainError(ValueError):
    """A point or parameter lies outside the declared domain of a family."""


class NotSolvableError(ValueError):
    """A candidate implicit family cannot be put in the solvable form."""


@dataclass(frozen=True)
class GraphBranch:
    """One graph piece of a zero locus: ``x[other] = g(u)`` for ``x[axis] = u`` in ``interval``."""

    axis: int
    interval: tuple[float, float]
    g: Callable[[np.ndarray], np.ndarray]
    dg: Callable[[np.ndarray], np.ndarray]

    def points(self, u):
        u = np.asarray(u, dtype=float)
        other = self.g(u)
        return np.stack([u, other] if self.axis == 0 else [other, u], axis=-1)


@dataclass(frozen=True)
class SolvableFamily:
    name: str
    n: int
    t: int
    F: Callable
    grad_x_F: Callable
    image_box: Optional[tuple[tuple[float, float], ...]] = None
    param_box: Optional[tuple[tuple[float, float], ...]] = None
    exclude: Optional[Callable] = None
    linear: Optional[Callable] = None
    graphs: Optional[Callable] = field(default=None, compare=False)

    def f(self, x, lam):
        lam = np.asarray(lam, dtype=float)
        return lam[..., -1] - self.F(np.asarray(x, dtype=float), lam[..., :-1])

    def grad_x_f(self, x, lam):
        lam = np.asarray(lam, dtype=float)
        return -self.grad_x_F(np.asarray(x, dtype=float), lam[..., :-1])

    def grad_lambda_f(self, x, lam, h: float = 1e-6) -> np.ndarray:
        """``(-dF/dlam_1, ..., -dF/dlam_{t-1}, 1)`` with central differences for the prefix."""
        x = np.asarray(x, dtype=float)
        lam = np.asarray(lam, dtype=float)
        out = np.empty(self.t)
        for k in range(self.t - 1):
            e = np.zeros(self.t - 1)
            e[k] = h
            lp = lam[:-1]
            out[k] = -(self.F(x, lp + e) - self.F(x, lp - e)) / (2 * h)
        out[-1] = 1.0
        return out

    def in_image_domain(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n or not np.all(np.isfinite(x)):
            return False
        if self.image_box is not None:
            for k, (lo, hi) in enumerate(self.image_box):
                if not lo <= x[k] <= hi:
                    return False
        if self.exclude is not None and self.exclude(x):
            return False
        return True


def hough_transform_of_point(fam: SolvableFamily, x):
    """Graph ``lam' -> F(x; lam')`` of the Hough transform of the point ``x``.

    A parameter ``lam`` lies on it exactly when ``x`` lies on ``S(lam)``.
    """
    x = np.asarray(x, dtype=float)
    if not fam.in_image_domain(x):
        raise DomainError(f"point {x.tolist()} outside the image domain of {fam.name}")

    def graph(lam_prime):
        return fam.F(x, np.asarray(lam_prime, dtype=float))

    return graph


# -- built-in families -----------------------------------------------------


def _line_angle_graphs(lam):
    theta, gamma = float(lam[0]), float(lam[1])
    c, s = np.cos(theta), np.sin(theta)
    inf = (-np.inf, np.inf)
    if abs(s) >= abs(c):
        return [GraphBranch(0, inf, lambda u: (gamma - u * c) / s, lambda u: np.full_like(u, -c / s))]
    return [GraphBranch(1, inf, lambda u: (gamma - u * s) / c, lambda u: np.full_like(u, -s / c))]


def line_angle() -> SolvableFamily:
    """Lines ``gamma - x1 cos(theta) - x2 sin(theta) = 0``; ``lam = (theta, gamma)``."""

    def F(x, lp):
        th = lp[..., 0]
        return x[..., 0] * np.cos(th) + x[..., 1] * np.sin(th)

    def grad(x, lp):
        th = np.broadcast_to(lp[..., 0], np.broadcast_shapes(x.shape[:-1], lp.shape[:-1]))
        return np.stack([np.cos(th), np.sin(th)], axis=-1)

    def linear(lp):
        th = float(lp[0])
        return np.array([np.cos(th), np.sin(th)]), 0.0

    return SolvableFamily("line-angle", 2, 2, F, grad, linear=linear, graphs=_line_angle_graphs)


def _line_slope_graphs(lam):
    w, gamma = float(lam[0]), float(lam[1])
    return [GraphBranch(0, (-np.inf, np.inf), lambda u: gamma - w * u, lambda u: np.full_like(u, -w))]


def line_slope() -> SolvableFamily:
    """Lines ``gamma - w1 x1 - x2 = 0`` (not parallel to the x2 axis); ``lam = (w1, gamma)``."""

    def F(x, lp):
        return lp[..., 0] * x[..., 0] + x[..., 1]

    def grad(x, lp):
        w = np.broadcast_to(lp[..., 0], np.broadcast_shapes(x.shape[:-1], lp.shape[:-1]))
        return np.stack([w, np.ones_like(w)], axis=-1)

    def linear(lp):
        return np.array([float(lp[0]), 1.0]), 0.0

    return SolvableFamily("line-slope", 2, 2, F, grad, linear=linear, graphs=_line_slope_graphs)


def hyperplane(n: int = 2) -> SolvableFamily:
    """Hyperplanes ``gamma - w . x = 0`` in ``R^n``; ``lam = (w_1, ..., w_n, gamma)``."""
    if n < 2:
        raise ValueError("hyperplane family needs n >= 2")

    def F(x, lp):
        return np.sum(x * lp, axis=-1)

    def grad(x, lp):
        return np.broadcast_to(lp, np.broadcast_shapes(x.shape, lp.shape)).copy()

    def linear(lp):
        return np.asarray(lp, dtype=float).copy(), 0.0

    graphs = None
    if n == 2:
        def graphs(lam):
            w1, w2, gamma = (float(v) for v in lam)
            if abs(w2) >= abs(w1):
                if w2 == 0.0:
                    return []
                return [GraphBranch(0, (-np.inf, np.inf), lambda u: (gamma - w1 * u) / w2,
                                    lambda u: np.full_like(u, -w1 / w2))]
            return [GraphBranch(1, (-np.inf, np.inf), lambda u: (gamma - w2 * u) / w1,
                                lambda u: np.full_like(u, -w2 / w1))]

    return SolvableFamily("hyperplane", n, n + 1, F, grad, linear=linear, graphs=graphs)


def _weierstrass_graphs(lam):
    a, b = float(lam[0]), float(lam[1])
    # branches x2 = +-sqrt(x1^3 + a x1 + b) over the x1 where the radicand is positive
    roots = np.roots([1.0, 0.0, a, b])
    real = np.sort(roots[np.abs(roots.imag) < 1e-12].real)
    pieces = []
    if len(real) != 3:
        pieces.append((real[0], np.inf))
    else:
        pieces.extend([(real[0], real[1]), (real[2], np.inf)])

    def rad(u):
        return np.maximum(u ** 3 + a * u + b, 0.0)

    out = []
    for sign in (1.0, -1.0):
        for lo, hi in pieces:
            out.append(GraphBranch(
                0, (lo, hi),
                lambda u, s=sign: s * np.sqrt(rad(u)),
                lambda u, s=sign: s * (3 * u ** 2 + a) / (2 * np.sqrt(np.maximum(rad(u), 1e-300))),
            ))
    return out


def weierstrass_cubic() -> SolvableFamily:
    """Cubics ``x2^2 = x1^3 + a x1 + b``, solvable in ``b``; ``lam = (a, b)``.

    ``F(x; a) = x2^2 - x1^3 - a x1``. Points where both ``3 x1^2 + a`` and
    ``x2`` vanish are singular and belong to no image domain.
    """

    def F(x, lp):
        x1, x2 = x[..., 0], x[..., 1]
        return x2 ** 2 - x1 ** 3 - lp[..., 0] * x1

    def grad(x, lp):
        x1, x2 = x[..., 0], x[..., 1]
        a = lp[..., 0]
        g1 = -3 * x1 ** 2 - a
        g2 = 2 * x2
        shape = np.broadcast_shapes(np.shape(g1), np.shape(g2))
        return np.stack([np.broadcast_to(g1, shape), np.broadcast_to(g2, shape)], axis=-1)

    return SolvableFamily("weierstrass", 2, 2, F, grad, graphs=_weierstrass_graphs)


def projection(theta: float = 0.0) -> SolvableFamily:
    """Parallel lines ``gamma - x1 cos(theta) - x2 sin(theta) = 0`` at a fixed angle; ``lam = (gamma,)``.

    The one-parameter case: the Hough counter of a point set is a histogram
    of the projections ``x . (cos theta, sin theta)``.
    """
    c, s = math.cos(theta), math.sin(theta)

    def F(x, lp):
        return x[..., 0] * c + x[..., 1] * s

    def grad(x, lp):
        shape = x.shape[:-1]
        return np.stack([np.full(shape, c), np.full(shape, s)], axis=-1)

    def linear(lp):
        return np.array([c, s]), 0.0

    return SolvableFamily("projection", 2, 1, F, grad, linear=linear)


def from_name(name: str, **kwargs) -> SolvableFamily:
    factories = {
        "line-angle": line_angle,
        "line-slope": line_slope,
        "hyperplane": hyperplane,
        "weierstrass": weierstrass_cubic,
        "projection": projection,
    }
    try:
        return factories[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(factories)}") from None


# -- validation of implicit candidates -------------------------------------------


@dataclass(frozen=True)
class ImplicitFamily:
    """A general implicit family ``f(x; lam) = 0`` given only by ``f``.

    ``image_box`` and ``param_box`` bound the region probed during validation.
    """

    name: str
    n: int
    t: int
    f: Callable
    image_box: tuple[tuple[float, float], ...]
    param_box: tuple[tuple[float, float], ...]


def _solvable_coefficient(cand: ImplicitFamily, k: int, rng, samples: int = 64, h: float = 1e-3):
    """Constant ``c`` with ``df/dlam_k = c`` everywhere on the probe set, or ``None``."""
    lo_x, hi_x = np.array(cand.image_box, dtype=float).T
    lo_l, hi_l = np.array(cand.param_box, dtype=float).T
    x = rng.uniform(lo_x, hi_x, size=(samples, cand.n))
    lam = rng.uniform(lo_l, hi_l, size=(samples, cand.t))
    e = np.zeros(cand.t)
    e[k] = h
    f0 = cand.f(x, lam)
    fp = cand.f(x, lam + e)
    fm = cand.f(x, lam - e)
    slope = (fp - fm) / (2 * h)
    curv = (fp - 2 * f0 + fm) / h ** 2
    scale = max(1.0, float(np.max(np.abs(f0))))
    if np.max(np.abs(curv)) > 1e-4 * scale:
        return None
    c = float(np.median(slope))
    if abs(c) < 1e-12 or np.max(np.abs(slope - c)) > 1e-7 * max(1.0, abs(c)):
        return None
    return c


def validate_solvability(candidate, seed: int = 0) -> SolvableFamily:
    """Accept a family in solvable form, reject anything else with a diagnostic.

    A :class:`SolvableFamily` is accepted as declared. An
    :class:`ImplicitFamily` is probed numerically: it is accepted only if
    ``df/dlam_t`` is a nonzero constant ``c`` on the probe set, in which case
    ``F = lam_t - f / c`` is returned. Otherwise :class:`NotSolvableError`
    names the parameters in which the family is (or is not) solvable.
    """
    if isinstance(candidate, SolvableFamily):
        if candidate.t < 1 or candidate.n < 1:
            raise NotSolvableError(f"{candidate.name}: degenerate dimensions")
        return candidate
    if not isinstance(candidate, ImplicitFamily):
        raise NotSolvableError(f"unsupported candidate type {type(candidate).__name__}")

    rng = np.random.default_rng(seed)
    coeffs = [_solvable_coefficient(candidate, k, rng) for k in range(candidate.t)]
    c = coeffs[-1]
    if c is None:
        solvable = [k + 1 for k, ck in enumerate(coeffs) if ck is not None]
        if solvable:
            hint = f"it is solvable in lambda_{solvable}; reorder parameters so that one is last"
        else:
            hint = "it is not solvable in any parameter"
        raise NotSolvableError(
            f"{candidate.name}: f is not of the form lambda_t - F(x; lambda') "
            f"(df/dlambda_t is not a nonzero constant); {hint}"
        )

    f = candidate.f

    def F(x, lp):
        shape = np.broadcast_shapes(x.shape[:-1], lp.shape[:-1])
        lam = np.concatenate([np.broadcast_to(lp, shape + lp.shape[-1:]), np.zeros(shape + (1,))], axis=-1)
        return -f(np.broadcast_to(x, shape + x.shape[-1:]), lam) / c

    def grad(x, lp, h=1e-6):
        cols = []
        for i in range(candidate.n):
            e = np.zeros(candidate.n)
            e[i] = h
            cols.append((F(x + e, lp) - F(x - e, lp)) / (2 * h))
        return np.stack(cols, axis=-1)

    return SolvableFamily(candidate.name, candidate.n, candidate.t, F, grad,
                          image_box=candidate.image_box, param_box=candidate.param_box)


def conchoid_of_sluse() -> ImplicitFamily:
    """``a (x1 - a)(x1^2 + x2^2) - b^2 x1^2``, solvable in neither ``a`` nor ``b``."""

    def f(x, lam):
        x1, x2 = x[..., 0], x[..., 1]
        a, b = lam[..., 0], lam[..., 1]
        return a * (x1 - a) * (x1 ** 2 + x2 ** 2) - b ** 2 * x1 ** 2

    return ImplicitFamily("conchoid", 2, 2, f, ((-2, 2), (-2, 2)), ((0.1, 2), (0.1, 2)))
