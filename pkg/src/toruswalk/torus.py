"""Geometry of the two-dimensional discrete torus and its index sets.

The torus of side L (a positive even integer) is the set of integer
points with both coordinates in the half-open interval (-L/2, L/2],
with arithmetic mod L.  Everything downstream (kernels, spectral
grids, walkers) speaks in these canonical representatives, so the
wrapping convention lives here and nowhere else.

Index sets used throughout:

* box(K):          [-K/2, K/2]^2 in Z^2 (closed square),
* torus_square(r): (-r/2, r/2]^2 in Z^2 (half-open square, real r),
* disc(k):         Euclidean ball |x| <= k/2 in Z^2,
* annulus(alpha, v, L): the scale-window used for start points,
      alpha = 0:        torus_square(v) minus the origin,
      0 < alpha < 1:    torus_square(L^alpha * v) minus torus_square(L^alpha / v),
      alpha = 1:        torus_square(L) minus torus_square(L / v).

Each region supports vectorized membership and enumeration; punctured
variants drop the origin.

Grid storage convention: arrays over the torus are laid out row-major
with linear index (x1 + L/2 - 1) * L + (x2 + L/2 - 1), i.e. axis
values sorted increasingly from -L/2+1 to L/2.  The frequency at
linear index i is 2*pi/L times the point at linear index i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TorusSpec:
    """Side length of the torus; L must be a positive even integer."""

    L: int

    def __post_init__(self) -> None:
        if not isinstance(self.L, (int, np.integer)) or isinstance(self.L, bool):
            raise ValueError(f"torus side must be an integer, got {self.L!r}")
        if self.L < 2 or self.L % 2 != 0:
            raise ValueError(f"torus side must be a positive even integer, got {self.L}")

    @property
    def n_points(self) -> int:
        return self.L * self.L

    def axis_coords(self) -> np.ndarray:
        """Coordinate values along one axis, sorted: -L/2+1, ..., L/2."""
        half = self.L // 2
        return np.arange(-half + 1, half + 1, dtype=np.int64)


def wrap(points: np.ndarray, L: int) -> np.ndarray:
    """Map integer points of Z^2 to canonical torus representatives.

    Parameters
    ----------
    points : array_like of int, shape (..., 2)
        Points in Z^2.
    L : int
        Torus side (positive even integer).

    Returns
    -------
    ndarray of int64, same shape
        Congruent points with both coordinates in (-L/2, L/2].
    """
    if L < 2 or L % 2 != 0:
        raise ValueError(f"torus side must be a positive even integer, got {L}")
    p = np.asarray(points, dtype=np.int64)
    half = L // 2
    return (p + (half - 1)) % L - (half - 1)


def index_of(points: np.ndarray, spec: TorusSpec) -> np.ndarray:
    """Linear index of canonical torus points under the documented layout."""
    p = np.asarray(points, dtype=np.int64)
    half = spec.L // 2
    i1 = p[..., 0] + half - 1
    i2 = p[..., 1] + half - 1
    if np.any((i1 < 0) | (i1 >= spec.L) | (i2 < 0) | (i2 >= spec.L)):
        raise ValueError("point outside canonical torus range; wrap() it first")
    return i1 * spec.L + i2


def point_of(indices: np.ndarray, spec: TorusSpec) -> np.ndarray:
    """Inverse of index_of: canonical point at each linear index."""
    idx = np.asarray(indices, dtype=np.int64)
    if np.any((idx < 0) | (idx >= spec.n_points)):
        raise ValueError("linear index out of range")
    half = spec.L // 2
    x1 = idx // spec.L - (half - 1)
    x2 = idx % spec.L - (half - 1)
    return np.stack([x1, x2], axis=-1)


def point_grid(spec: TorusSpec) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate grids X1, X2 of shape (L, L) in sorted layout."""
    ax = spec.axis_coords()
    return np.meshgrid(ax, ax, indexing="ij")


def frequencies(spec: TorusSpec) -> tuple[np.ndarray, np.ndarray]:
    """Dual lattice points and angular frequencies of the torus.

    Returns
    -------
    points : ndarray of int64, shape (L^2, 2)
        Canonical torus points y, in linear-index order.
    thetas : ndarray of float64, shape (L^2, 2)
        2*pi*y/L for each point; every component lies in (-pi, pi].
    """
    x1, x2 = point_grid(spec)
    pts = np.stack([x1.ravel(), x2.ravel()], axis=-1)
    return pts, TWO_PI * pts / spec.L


def to_fft_layout(grid: np.ndarray) -> np.ndarray:
    """Reindex a sorted-layout (L, L) grid so index i holds coordinate i mod L."""
    L = grid.shape[0]
    return np.roll(grid, -(L // 2 - 1), axis=(0, 1))


def from_fft_layout(grid: np.ndarray) -> np.ndarray:
    """Inverse of to_fft_layout."""
    L = grid.shape[0]
    return np.roll(grid, L // 2 - 1, axis=(0, 1))


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class Box:
    """Closed square [-K/2, K/2]^2 in Z^2, optionally punctured at the origin."""

    K: float
    punctured: bool = False

    def __post_init__(self) -> None:
        if self.K < 0:
            raise ValueError(f"box size must be nonnegative, got {self.K}")


@dataclass(frozen=True)
class TorusSquare:
    """Half-open square (-r/2, r/2]^2 in Z^2; r may be any positive real."""

    r: float
    punctured: bool = False

    def __post_init__(self) -> None:
        if self.r <= 0:
            raise ValueError(f"torus-square size must be positive, got {self.r}")


@dataclass(frozen=True)
class Disc:
    """Euclidean ball |x| <= k/2 in Z^2, optionally punctured."""

    k: float
    punctured: bool = False

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError(f"disc size must be nonnegative, got {self.k}")


@dataclass(frozen=True)
class Annulus:
    """Scale window between two torus squares, parametrized by alpha in [0, 1].

    alpha = 0 gives the punctured square of side v; alpha = 1 the full
    torus minus the square of side L/v; intermediate alpha the square
    of side L^alpha * v minus the square of side L^alpha / v.  An empty
    window is legitimate (reported as an empty set, not an error).
    """

    alpha: float
    v: float
    L: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.v <= 0:
            raise ValueError(f"window parameter v must be positive, got {self.v}")
        if self.L < 2 or self.L % 2 != 0:
            raise ValueError(f"torus side must be a positive even integer, got {self.L}")

    def bounds(self) -> tuple[float, float]:
        """(inner, outer) torus-square sides; inner 0 means puncture only."""
        if self.alpha == 0.0:
            return 0.0, self.v
        if self.alpha == 1.0:
            return self.L / self.v, float(self.L)
        scale = float(self.L) ** self.alpha
        return scale / self.v, scale * self.v


Region = Box | TorusSquare | Disc | Annulus


def _in_torus_square(p: np.ndarray, r: float) -> np.ndarray:
    return ((p > -r / 2.0) & (p <= r / 2.0)).all(axis=-1)


def contains(region: Region, points: np.ndarray) -> np.ndarray:
    """Vectorized membership test; points has shape (..., 2)."""
    p = np.asarray(points, dtype=np.int64)
    origin = (p == 0).all(axis=-1)
    if isinstance(region, Box):
        inside = (np.abs(p) <= region.K / 2.0).all(axis=-1)
        return inside & ~origin if region.punctured else inside
    if isinstance(region, TorusSquare):
        inside = _in_torus_square(p, region.r)
        return inside & ~origin if region.punctured else inside
    if isinstance(region, Disc):
        r2 = (region.k / 2.0) ** 2
        inside = (p[..., 0].astype(np.float64) ** 2 + p[..., 1] ** 2) <= r2
        return inside & ~origin if region.punctured else inside
    if isinstance(region, Annulus):
        inner, outer = region.bounds()
        inside = _in_torus_square(p, outer) & ~origin
        if inner > 0.0:
            inside &= ~_in_torus_square(p, inner)
        return inside
    raise TypeError(f"not a region: {region!r}")


def _torus_square_axis_range(r: float) -> tuple[int, int]:
    # integers k with -r/2 < k <= r/2
    return int(math.floor(-r / 2.0)) + 1, int(math.floor(r / 2.0))


def enumerate_region(region: Region) -> np.ndarray:
    """All integer points of a region, shape (n, 2), row-major sorted order."""
    if isinstance(region, Box):
        m = int(math.floor(region.K / 2.0))
        lo, hi = -m, m
    elif isinstance(region, TorusSquare):
        lo, hi = _torus_square_axis_range(region.r)
    elif isinstance(region, Disc):
        m = int(math.floor(region.k / 2.0))
        lo, hi = -m, m
    elif isinstance(region, Annulus):
        _, outer = region.bounds()
        lo, hi = _torus_square_axis_range(outer)
    else:
        raise TypeError(f"not a region: {region!r}")
    if hi < lo:
        return np.empty((0, 2), dtype=np.int64)
    ax = np.arange(lo, hi + 1, dtype=np.int64)
    x1, x2 = np.meshgrid(ax, ax, indexing="ij")
    pts = np.stack([x1.ravel(), x2.ravel()], axis=-1)
    return pts[contains(region, pts)]
