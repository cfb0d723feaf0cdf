"""
Structured rectangular meshes with tensor-product Lagrange elements.

The physical domain is a rectangle Omega_int = (0, l) x (0, d) surrounded by an
absorbing layer of width kappa on all four sides, so the computational domain is
Omega = (-kappa, l + kappa) x (-kappa, d + kappa).  Meshes are uniform per axis;
the layer width is snapped up to a whole number of elements so that the
interfaces x in {0, l}, y in {0, d} coincide with element boundaries.

Degrees of freedom are the tensor-product Lagrange nodes of order p, numbered
lexicographically with x fastest.  Elements are numbered the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class GridError(ValueError):
    """Raised when a mesh cannot be built or a query is malformed."""


class MeshAlignmentError(GridError):
    """Raised when a query box does not line up with element boundaries."""


class RegionTag(Enum):
    INTERIOR = "interior"
    PML_WEST = "pml_west"
    PML_EAST = "pml_east"
    PML_SOUTH = "pml_south"
    PML_NORTH = "pml_north"
    PML_CORNER = "pml_corner"


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle (x_lo, x_hi) x (y_lo, y_hi)."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise GridError(
                f"degenerate rectangle: ({self.x_lo}, {self.x_hi}) x ({self.y_lo}, {self.y_hi})"
            )

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def height(self) -> float:
        return self.y_hi - self.y_lo

    def contains(self, x: float, y: float, tol: float = 0.0) -> bool:
        return (
            self.x_lo - tol <= x <= self.x_hi + tol
            and self.y_lo - tol <= y <= self.y_hi + tol
        )


@dataclass(frozen=True)
class MeshRule:
    """Resolution rule: either a fixed target element size or a pollution rule.

    The pollution rule targets h = C * k^(-1.25), which keeps the p=2 phase
    error roughly level as k grows.
    """

    kind: str  # "h_target" | "pollution"
    value: float

    @classmethod
    def h(cls, h_target: float) -> "MeshRule":
        return cls("h_target", float(h_target))

    @classmethod
    def pollution(cls, constant: float = 1.0) -> "MeshRule":
        return cls("pollution", float(constant))

    def resolve(self, k: float) -> float:
        if self.value <= 0.0 or not np.isfinite(self.value):
            raise GridError(f"mesh rule value must be positive and finite, got {self.value}")
        if self.kind == "h_target":
            return self.value
        if self.kind == "pollution":
            if k <= 0.0:
                raise GridError(f"pollution rule needs k > 0, got k={k}")
            return self.value * float(k) ** (-1.25)
        raise GridError(f"unknown mesh rule kind {self.kind!r}")


def _ceil_count(length: float, step: float) -> int:
    # tiny slack so exact ratios do not round up through fp noise
    return int(math.ceil(length / step - 1e-9))


class Grid:
    """Uniform tensor-product mesh over Omega with order-p Lagrange dofs.

    Attributes
    ----------
    domain : Rect
        Full computational domain Omega including the absorbing layer.
    omega_int : Rect
        Physical region, snapped to node coordinates (bit-exact with the
        node arrays, so region tests and coefficient branches agree).
    nx, ny : int
        Element counts per axis (including layer elements).
    n_pml_x, n_pml_y : int
        Layer element counts per side on each axis (0 for plain meshes).
    p : int
        Polynomial order of the Lagrange basis.
    hx, hy : float
        Element sizes; ``h`` is max(hx, hy).
    node_x, node_y : ndarray
        Per-axis dof coordinates, length nx*p+1 / ny*p+1.  Element boundary
        coordinates are the slices ``node_x[::p]``, ``node_y[::p]``.
    """

    def __init__(self, node_x, node_y, p, n_pml_x, n_pml_y):
        self.p = int(p)
        if self.p < 1:
            raise GridError(f"polynomial order must be >= 1, got {p}")
        self.node_x = np.asarray(node_x, dtype=np.float64)
        self.node_y = np.asarray(node_y, dtype=np.float64)
        self.nx = (self.node_x.size - 1) // self.p
        self.ny = (self.node_y.size - 1) // self.p
        if self.nx * self.p + 1 != self.node_x.size or self.ny * self.p + 1 != self.node_y.size:
            raise GridError("node array lengths do not match an integer element count")
        self.n_pml_x = int(n_pml_x)
        self.n_pml_y = int(n_pml_y)
        if not (0 <= 2 * self.n_pml_x < self.nx and 0 <= 2 * self.n_pml_y < self.ny):
            raise GridError("layer element counts leave no interior elements")

        self.xs_el = self.node_x[:: self.p]
        self.ys_el = self.node_y[:: self.p]
        self.hx = float((self.node_x[-1] - self.node_x[0]) / self.nx)
        self.hy = float((self.node_y[-1] - self.node_y[0]) / self.ny)
        self.h = max(self.hx, self.hy)
        self.domain = Rect(
            float(self.node_x[0]), float(self.node_x[-1]),
            float(self.node_y[0]), float(self.node_y[-1]),
        )
        # snapped physical region; falls back to the full domain when no layer
        self.omega_int = Rect(
            float(self.xs_el[self.n_pml_x]),
            float(self.xs_el[self.nx - self.n_pml_x]),
            float(self.ys_el[self.n_pml_y]),
            float(self.ys_el[self.ny - self.n_pml_y]),
        )
        self.kappa_x = float(self.omega_int.x_lo - self.domain.x_lo)
        self.kappa_y = float(self.omega_int.y_lo - self.domain.y_lo)

        self.ndof_x = self.nx * self.p + 1
        self.ndof_y = self.ny * self.p + 1
        self.n_dofs = self.ndof_x * self.ndof_y
        self.n_elements = self.nx * self.ny

        ix = np.arange(self.ndof_x)
        iy = np.arange(self.ndof_y)
        on_bnd_x = (ix == 0) | (ix == self.ndof_x - 1)
        on_bnd_y = (iy == 0) | (iy == self.ndof_y - 1)
        bnd_mask = on_bnd_y[:, None] | on_bnd_x[None, :]
        self.boundary_dofs = np.flatnonzero(bnd_mask.ravel())
        self.interior_dofs = np.flatnonzero(~bnd_mask.ravel())

        self._element_dofs = None

    # -- numbering ---------------------------------------------------------

    def dof_id(self, ix: int, iy: int) -> int:
        return iy * self.ndof_x + ix

    def dof_coords(self, dofs=None) -> np.ndarray:
        """Coordinates of the given dofs (all by default), shape (n, 2)."""
        if dofs is None:
            X, Y = np.meshgrid(self.node_x, self.node_y)
            return np.column_stack([X.ravel(), Y.ravel()])
        dofs = np.asarray(dofs)
        return np.column_stack([self.node_x[dofs % self.ndof_x], self.node_y[dofs // self.ndof_x]])

    def nearest_dof(self, x: float, y: float) -> int:
        ix = int(np.argmin(np.abs(self.node_x - x)))
        iy = int(np.argmin(np.abs(self.node_y - y)))
        return self.dof_id(ix, iy)

    def element_dofs(self) -> np.ndarray:
        """Dof ids per element, shape (n_elements, (p+1)**2), x fastest."""
        if self._element_dofs is None:
            p = self.p
            e = np.arange(self.n_elements)
            ex = e % self.nx
            ey = e // self.nx
            loc = np.arange(p + 1)
            gx = ex[:, None] * p + loc[None, :]            # (n_el, p+1)
            gy = ey[:, None] * p + loc[None, :]
            self._element_dofs = (
                gy[:, :, None] * self.ndof_x + gx[:, None, :]
            ).reshape(self.n_elements, (p + 1) ** 2)
        return self._element_dofs

    def element_origin(self, elements=None):
        """Lower-left corner coordinates of the given elements."""
        if elements is None:
            elements = np.arange(self.n_elements)
        elements = np.asarray(elements)
        return self.xs_el[elements % self.nx], self.ys_el[elements // self.nx]

    # -- queries -----------------------------------------------------------

    def _axis_interval(self, coords: np.ndarray, lo: float, hi: float, h: float):
        tol = 1e-9 * h
        i_lo = int(np.argmin(np.abs(coords - lo)))
        i_hi = int(np.argmin(np.abs(coords - hi)))
        if abs(coords[i_lo] - lo) > tol or abs(coords[i_hi] - hi) > tol:
            raise MeshAlignmentError(
                f"box edge ({lo}, {hi}) does not lie on element boundaries "
                f"(nearest: {coords[i_lo]}, {coords[i_hi]})"
            )
        return i_lo, i_hi

    def elements_in(self, box: Rect) -> np.ndarray:
        """Ids of the elements tiling a mesh-aligned box, ascending."""
        jx0, jx1 = self._axis_interval(self.xs_el, box.x_lo, box.x_hi, self.hx)
        jy0, jy1 = self._axis_interval(self.ys_el, box.y_lo, box.y_hi, self.hy)
        ex = np.arange(jx0, jx1)
        ey = np.arange(jy0, jy1)
        return (ey[:, None] * self.nx + ex[None, :]).ravel()

    def classify_point(self, x: float, y: float) -> RegionTag:
        """Region containing (x, y); interfaces count as interior."""
        tol = 1e-12 * max(1.0, self.domain.width, self.domain.height)
        if not self.domain.contains(x, y, tol):
            raise GridError(f"point ({x}, {y}) lies outside the computational domain")
        oi = self.omega_int
        west = x < oi.x_lo
        east = x > oi.x_hi
        south = y < oi.y_lo
        north = y > oi.y_hi
        if (west or east) and (south or north):
            return RegionTag.PML_CORNER
        if west:
            return RegionTag.PML_WEST
        if east:
            return RegionTag.PML_EAST
        if south:
            return RegionTag.PML_SOUTH
        if north:
            return RegionTag.PML_NORTH
        return RegionTag.INTERIOR


DEFAULT_MAX_DOFS = 200_000


def build_grid(
    omega_int: Rect,
    kappa: float,
    k: float,
    resolution_rule: MeshRule,
    p: int = 2,
    max_dofs: int = DEFAULT_MAX_DOFS,
) -> Grid:
    """Mesh Omega_int plus an absorbing layer of width >= kappa on every side.

    The element size satisfies h <= target per axis (counts round up), and the
    layer width is snapped up to a whole number of elements.  Fails if the
    total dof count exceeds ``max_dofs`` or an axis has fewer than 4 elements.
    """
    if kappa <= 0.0:
        raise GridError(f"layer width must be positive, got kappa={kappa}")
    if k < 1.0:
        raise GridError(f"wavenumber must be >= 1, got k={k}")
    h_target = resolution_rule.resolve(k)

    counts = []
    for length in (omega_int.width, omega_int.height):
        n_int = _ceil_count(length, h_target)
        h_ax = length / n_int
        n_pml = _ceil_count(kappa, h_ax)
        counts.append((n_int, n_pml, h_ax))

    (nx_int, npx, hx), (ny_int, npy, hy) = counts
    nx = nx_int + 2 * npx
    ny = ny_int + 2 * npy
    if nx < 4 or ny < 4:
        raise GridError(f"element count per axis below 4: nx={nx}, ny={ny}")
    n_dofs = (nx * p + 1) * (ny * p + 1)
    if n_dofs > max_dofs:
        raise GridError(
            f"mesh would need {n_dofs} dofs (> max_dofs={max_dofs}); "
            f"nx={nx}, ny={ny}, p={p}"
        )

    node_x = np.linspace(omega_int.x_lo - npx * hx, omega_int.x_hi + npx * hx, nx * p + 1)
    node_y = np.linspace(omega_int.y_lo - npy * hy, omega_int.y_hi + npy * hy, ny * p + 1)
    return Grid(node_x, node_y, p, npx, npy)


def make_grid(domain: Rect, nx: int, ny: int, p: int = 2) -> Grid:
    """Plain mesh of a rectangle with explicit element counts and no layer."""
    node_x = np.linspace(domain.x_lo, domain.x_hi, nx * p + 1)
    node_y = np.linspace(domain.y_lo, domain.y_hi, ny * p + 1)
    return Grid(node_x, node_y, p, 0, 0)


def classify_point(grid: Grid, x: float, y: float) -> RegionTag:
    return grid.classify_point(x, y)


def elements_in(grid: Grid, box: Rect) -> np.ndarray:
    return grid.elements_in(box)
