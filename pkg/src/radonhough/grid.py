"""Parameter-space discretization: sampling points, half-open cells and snap maps.

A discretization is fixed by an initialization point ``lambda_star``, a
sampling distance ``d`` per axis and inclusive integer index bounds. The
sampling point with multi-index ``n`` is ``lambda_star + n * d`` and its cell
is the half-open box ``[center - d/2, center + d/2)`` along every axis.
Cells are never materialized.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


class OutOfDomainError(ValueError):
    """A parameter value lies outside the investigation domain of the grid."""


@dataclass(frozen=True)
class Discretization:
    lambda_star: tuple[float, ...]
    d: tuple[float, ...]
    n_lo: tuple[int, ...]
    n_hi: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lambda_star", tuple(float(v) for v in self.lambda_star))
        object.__setattr__(self, "d", tuple(float(v) for v in self.d))
        object.__setattr__(self, "n_lo", tuple(int(v) for v in self.n_lo))
        object.__setattr__(self, "n_hi", tuple(int(v) for v in self.n_hi))
        t = len(self.lambda_star)
        if t < 1 or not (len(self.d) == len(self.n_lo) == len(self.n_hi) == t):
            raise ValueError("lambda_star, d, n_lo and n_hi must have the same length >= 1")
        if not all(math.isfinite(v) for v in self.lambda_star):
            raise ValueError("lambda_star must be finite")
        if not all(math.isfinite(v) and v > 0 for v in self.d):
            raise ValueError(f"sampling distances must be positive, got {self.d}")
        if any(lo > hi for lo, hi in zip(self.n_lo, self.n_hi)):
            raise ValueError("empty index range")

    # -- constructors -----------------------------------------------------

    @classmethod
    def covering(cls, lambda_star, d, box) -> "Discretization":
        """Smallest grid whose cells cover ``box = [(lo, hi), ...]``."""
        n_lo, n_hi = [], []
        for ls, dk, (lo, hi) in zip(lambda_star, d, box):
            n_lo.append(math.floor(0.5 + (lo - ls) / dk))
            n_hi.append(math.floor(0.5 + (hi - ls) / dk))
        return cls(tuple(lambda_star), tuple(d), tuple(n_lo), tuple(n_hi))

    @classmethod
    def sinogram(cls, n_theta: int = 629, n_gamma: int = 287, gamma_max: float = math.sqrt(2.0)):
        """(theta, gamma) grid: ``n_theta`` angles on [0, pi), ``n_gamma`` offsets on [-gamma_max, gamma_max].

        The offsets include both endpoints; with an odd count gamma = 0 is a
        sampling point and ``lambda_star = (0, 0)``.
        """
        if n_theta < 1 or n_gamma < 2:
            raise ValueError("need n_theta >= 1 and n_gamma >= 2")
        d_gamma = 2.0 * gamma_max / (n_gamma - 1)
        if n_gamma % 2:
            half = (n_gamma - 1) // 2
            return cls((0.0, 0.0), (math.pi / n_theta, d_gamma), (0, -half), (n_theta - 1, half))
        return cls((0.0, -gamma_max), (math.pi / n_theta, d_gamma), (0, 0), (n_theta - 1, n_gamma - 1))

    # -- shape ------------------------------------------------------------

    @property
    def t(self) -> int:
        return len(self.lambda_star)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(hi - lo + 1 for lo, hi in zip(self.n_lo, self.n_hi))

    @property
    def D(self) -> float:
        return max(self.d)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.d))

    def centers(self, k: int) -> np.ndarray:
        """Sampling values along axis ``k`` in index order."""
        n = np.arange(self.n_lo[k], self.n_hi[k] + 1)
        return self.lambda_star[k] + n * self.d[k]

    def edges(self, k: int) -> np.ndarray:
        """Cell boundaries along axis ``k`` (one more than the number of cells)."""
        n = np.arange(self.n_lo[k], self.n_hi[k] + 2)
        return self.lambda_star[k] + (n - 0.5) * self.d[k]

    def box(self) -> list[tuple[float, float]]:
        """The covered investigation domain as ``[(lo, hi), ...]`` (upper ends open)."""
        return [
            (ls + (lo - 0.5) * dk, ls + (hi + 0.5) * dk)
            for ls, dk, lo, hi in zip(self.lambda_star, self.d, self.n_lo, self.n_hi)
        ]

    def scaled(self, factor: float) -> "Discretization":
        """Same initialization point and domain, every ``d_k`` multiplied by ``factor``."""
        return Discretization.covering(self.lambda_star, tuple(dk * factor for dk in self.d), self.box())

    # -- snap maps ----------------------------------------------------------

    def snap_component(self, k: int, value):
        """Closest sampling value along axis ``k``; half-way values go to the larger one.

        Works elementwise on arrays.
        """
        v = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("snap_component: non-finite input")
        ls, dk = self.lambda_star[k], self.d[k]
        out = ls + np.floor(0.5 + (v - ls) / dk) * dk
        return float(out) if out.ndim == 0 else out

    def snap_prefix(self, lambda_prime: Sequence[float]) -> tuple[float, ...]:
        if self.t < 2:
            raise ValueError("snap_prefix needs t >= 2; a one-dimensional grid has no prefix")
        if len(lambda_prime) != self.t - 1:
            raise ValueError(f"expected {self.t - 1} prefix components, got {len(lambda_prime)}")
        return tuple(self.snap_component(k, v) for k, v in enumerate(lambda_prime))

    # -- cells --------------------------------------------------------------

    def contains(self, lam: Sequence[float]) -> bool:
        try:
            self.cell_index(lam)
        except OutOfDomainError:
            return False
        return True

    def cell_index(self, lam: Sequence[float]) -> tuple[int, ...]:
        if len(lam) != self.t:
            raise ValueError(f"expected {self.t} components, got {len(lam)}")
        idx = []
        for k, v in enumerate(lam):
            if not math.isfinite(v):
                raise ValueError("cell_index: non-finite input")
            n = math.floor(0.5 + (v - self.lambda_star[k]) / self.d[k])
            if not self.n_lo[k] <= n <= self.n_hi[k]:
                raise OutOfDomainError(f"component {k} = {v} outside the grid")
            idx.append(n)
        return tuple(idx)

    def cell_center(self, index: Sequence[int]) -> tuple[float, ...]:
        if len(index) != self.t:
            raise ValueError(f"expected {self.t} indices, got {len(index)}")
        for k, n in enumerate(index):
            if not self.n_lo[k] <= n <= self.n_hi[k]:
                raise OutOfDomainError(f"index {n} outside bounds on axis {k}")
        return tuple(ls + n * dk for ls, dk, n in zip(self.lambda_star, self.d, index))

    def array_index(self, index: Sequence[int]) -> tuple[int, ...]:
        """Position of cell ``index`` in a dense array of ``self.shape``."""
        return tuple(n - lo for n, lo in zip(index, self.n_lo))

    def iter_cells(self) -> Iterator[tuple[tuple[int, ...], tuple[float, ...]]]:
        """Yield ``(index, center)`` in row-major order over the index bounds."""
        ranges = [range(lo, hi + 1) for lo, hi in zip(self.n_lo, self.n_hi)]
        for index in itertools.product(*ranges):
            yield index, tuple(ls + n * dk for ls, dk, n in zip(self.lambda_star, self.d, index))

    def center_grid(self) -> np.ndarray:
        """All sampling points as an array of shape ``self.shape + (t,)``."""
        axes = [self.centers(k) for k in range(self.t)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    # -- text header ----------------------------------------------------------

    def to_header(self) -> str:
        fmt = lambda xs: ",".join(repr(float(x)) for x in xs)  # noqa: E731
        bounds = ",".join(f"{lo}:{hi}" for lo, hi in zip(self.n_lo, self.n_hi))
        return f"t={self.t} lambda_star={fmt(self.lambda_star)} d={fmt(self.d)} bounds={bounds}"

    @classmethod
    def from_header(cls, text: str) -> "Discretization":
        fields = dict(tok.split("=", 1) for tok in text.lstrip("#").split() if "=" in tok)
        try:
            t = int(fields["t"])
            lambda_star = tuple(float(v) for v in fields["lambda_star"].split(","))
            d = tuple(float(v) for v in fields["d"].split(","))
            pairs = [b.split(":") for b in fields["bounds"].split(",")]
        except (KeyError, ValueError) as exc:
            raise ValueError(f"malformed grid header: {text!r}") from exc
        disc = cls(lambda_star, d, tuple(int(p[0]) for p in pairs), tuple(int(p[1]) for p in pairs))
        if disc.t != t:
            raise ValueError("grid header dimension mismatch")
        return disc
