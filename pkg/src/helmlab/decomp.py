"""
Overlapping strip and checkerboard decompositions, partition of unity, and
algebraic transfer operators.

The physical region is split into an N1 x N2 grid of non-overlapping cells
(nearest split of element counts).  Each cell is extended outward by delta/2
per internal side, snapped outward to element boundaries, giving the interior
boxes whose pairwise overlap is at least delta.  Each interior box is then
inflated by the subdomain layer width kappa and clipped to the computational
domain; that is the subdomain Omega_j on which the local problem lives.

The partition of unity is a product of per-axis trapezoids: value 1 on the
non-overlapped part of each interior box, linear ramp to 0 across each
internal overlap, constant 1 continued outward across external sides (so its
support stays inside the region where local and global scalings agree), then
normalized nodally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import Grid, Rect


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class OverlapRule:
    """Requested overlap: fixed(delta) in domain units or layers(m) = m*h."""

    kind: str  # "fixed" | "layers"
    value: float

    def __post_init__(self):
        if self.kind not in ("fixed", "layers"):
            raise LayoutError(f"unknown overlap rule {self.kind!r}")
        if self.value <= 0.0 or not np.isfinite(self.value):
            raise LayoutError(f"overlap value must be positive, got {self.value}")

    @classmethod
    def fixed(cls, delta: float) -> "OverlapRule":
        return cls("fixed", float(delta))

    @classmethod
    def layers(cls, m: float) -> "OverlapRule":
        return cls("layers", float(m))

    def delta(self, h: float) -> float:
        return self.value * h if self.kind == "layers" else self.value

    def side_elements(self, h: float) -> int:
        """Extension per internal side: ceil(delta / (2h)), never below 1."""
        delta = self.delta(h)
        if delta < h * (1.0 - 1e-9):
            raise LayoutError(f"overlap delta = {delta:g} is below one element layer h = {h:g}")
        return int(math.ceil(delta / (2.0 * h) - 1e-9))


def _nearest_split(n: int, parts: int) -> list[int]:
    base, rem = divmod(n, parts)
    return [base + 1 if i < rem else base for i in range(parts)]


def _axis_layout(n_cells_int, n_pml, n_parts, m_side, n_ext, n_total):
    """Per-axis plateau and extended element ranges.

    Returns (plateau_ranges, extended_ranges) as lists of half-open element
    index intervals, plus the cell boundaries.
    """
    sizes = _nearest_split(n_cells_int, n_parts)
    if min(sizes) < 1:
        raise LayoutError(f"cannot split {n_cells_int} element columns into {n_parts} cells")
    bounds = [n_pml]
    for s in sizes:
        bounds.append(bounds[-1] + s)

    plateaus = []
    for i in range(n_parts):
        lo = bounds[i] - (m_side if i > 0 else 0)
        hi = bounds[i + 1] + (m_side if i < n_parts - 1 else 0)
        if lo < n_pml or hi > n_pml + n_cells_int:
            raise LayoutError(
                f"overlap extension ({m_side} layers/side) exceeds the neighbouring cell "
                f"(cells of {sizes} elements)"
            )
        plateaus.append((lo, hi))

    for i in range(n_parts - 2):
        if plateaus[i][1] > plateaus[i + 2][0]:
            raise LayoutError(
                "overlap so large that non-neighbouring subdomains would overlap "
                f"(cells of {sizes} elements, {m_side} layers/side)"
            )

    extended = []
    for i, (lo, hi) in enumerate(plateaus):
        elo = max(0, lo - n_ext) if i > 0 else 0
        ehi = min(n_total, hi + n_ext) if i < n_parts - 1 else n_total
        extended.append((elo, ehi))
    return plateaus, extended, bounds


class SubdomainLayout:
    """N1 x N2 overlapping decomposition bound to a grid.

    Subdomain j = i2*N1 + i1 with i1 the x slot (fastest).  For each j the
    layout exposes the interior (plateau) box, the extended box Omega_j, the
    element block of Omega_j, and the two dof sets: all dofs of Omega_j and
    the strictly interior ones forming V_{h,j}.
    """

    def __init__(self, grid: Grid, n1: int, n2: int, rule: OverlapRule,
                 kappa_interior: Optional[float] = None):
        if n1 < 1 or n2 < 1:
            raise LayoutError(f"subdomain counts must be >= 1, got {n1} x {n2}")
        self.grid = grid
        self.n1 = int(n1)
        self.n2 = int(n2)
        self.rule = rule

        if kappa_interior is None:
            n_ext_x, n_ext_y = grid.n_pml_x, grid.n_pml_y
        else:
            if kappa_interior <= 0.0:
                raise LayoutError(f"subdomain layer width must be positive, got {kappa_interior}")
            n_ext_x = int(math.ceil(kappa_interior / grid.hx - 1e-9))
            n_ext_y = int(math.ceil(kappa_interior / grid.hy - 1e-9))
        self.n_ext_x, self.n_ext_y = n_ext_x, n_ext_y
        self.kappa_interior = (n_ext_x * grid.hx, n_ext_y * grid.hy)

        nx_int = grid.nx - 2 * grid.n_pml_x
        ny_int = grid.ny - 2 * grid.n_pml_y
        self.m_side_x = rule.side_elements(grid.hx) if n1 > 1 else 0
        self.m_side_y = rule.side_elements(grid.hy) if n2 > 1 else 0
        px, ex, self.bounds_x = _axis_layout(nx_int, grid.n_pml_x, n1, self.m_side_x, n_ext_x, grid.nx)
        py, ey, self.bounds_y = _axis_layout(ny_int, grid.n_pml_y, n2, self.m_side_y, n_ext_y, grid.ny)
        self.plateau_x, self.plateau_y = px, py
        self.extended_x, self.extended_y = ex, ey

        # resolved minimal pairwise overlap over the decomposed axes
        widths = []
        if n1 > 1:
            widths.append(2 * self.m_side_x * grid.hx)
        if n2 > 1:
            widths.append(2 * self.m_side_y * grid.hy)
        self.delta = max(widths) if widths else 0.0

        self._dof_cache = {}

    # -- indexing ------------------------------------------------------------

    @property
    def n_subdomains(self) -> int:
        return self.n1 * self.n2

    def slot(self, j: int) -> tuple[int, int]:
        if not 0 <= j < self.n_subdomains:
            raise LayoutError(f"subdomain index {j} out of range (N = {self.n_subdomains})")
        return j % self.n1, j // self.n1

    def is_strip(self) -> bool:
        return self.n1 == 1 or self.n2 == 1

    # -- geometry ------------------------------------------------------------

    def plateau_box(self, j: int) -> Rect:
        i1, i2 = self.slot(j)
        (x0, x1), (y0, y1) = self.plateau_x[i1], self.plateau_y[i2]
        g = self.grid
        return Rect(float(g.xs_el[x0]), float(g.xs_el[x1]), float(g.ys_el[y0]), float(g.ys_el[y1]))

    def extended_box(self, j: int) -> Rect:
        i1, i2 = self.slot(j)
        (x0, x1), (y0, y1) = self.extended_x[i1], self.extended_y[i2]
        g = self.grid
        return Rect(float(g.xs_el[x0]), float(g.xs_el[x1]), float(g.ys_el[y0]), float(g.ys_el[y1]))

    def subdomain_elements(self, j: int) -> np.ndarray:
        i1, i2 = self.slot(j)
        (x0, x1), (y0, y1) = self.extended_x[i1], self.extended_y[i2]
        ex = np.arange(x0, x1)
        ey = np.arange(y0, y1)
        return (ey[:, None] * self.grid.nx + ex[None, :]).ravel()

    def _dof_block(self, j: int, interior: bool) -> np.ndarray:
        i1, i2 = self.slot(j)
        (x0, x1), (y0, y1) = self.extended_x[i1], self.extended_y[i2]
        p = self.grid.p
        off = 1 if interior else 0
        ix = np.arange(x0 * p + off, x1 * p + 1 - off)
        iy = np.arange(y0 * p + off, y1 * p + 1 - off)
        return (iy[:, None] * self.grid.ndof_x + ix[None, :]).ravel()

    def subdomain_dofs(self, j: int) -> np.ndarray:
        """V_{h,j}: dofs strictly inside Omega_j, ascending global ids."""
        key = (j, True)
        if key not in self._dof_cache:
            self._dof_cache[key] = self._dof_block(j, interior=True)
        return self._dof_cache[key]

    def closure_dofs(self, j: int) -> np.ndarray:
        """All dofs of the elements of Omega_j, ascending global ids."""
        key = (j, False)
        if key not in self._dof_cache:
            self._dof_cache[key] = self._dof_block(j, interior=False)
        return self._dof_cache[key]

    # -- reporting -----------------------------------------------------------

    def report(self) -> dict:
        g = self.grid
        subs = []
        for j in range(self.n_subdomains):
            pb, eb = self.plateau_box(j), self.extended_box(j)
            subs.append({
                "j": j,
                "slot": list(self.slot(j)),
                "interior_box": [pb.x_lo, pb.x_hi, pb.y_lo, pb.y_hi],
                "extended_box": [eb.x_lo, eb.x_hi, eb.y_lo, eb.y_hi],
                "n_dofs": int(self.subdomain_dofs(j).size),
            })
        return {
            "n1": self.n1,
            "n2": self.n2,
            "overlap_rule": f"{self.rule.kind}:{self.rule.value:g}",
            "delta": self.delta,
            "overlap_layers_per_side": [self.m_side_x, self.m_side_y],
            "kappa_interior": list(self.kappa_interior),
            "grid": {"nx": g.nx, "ny": g.ny, "p": g.p, "hx": g.hx, "hy": g.hy,
                     "n_dofs": int(g.n_dofs)},
            "subdomains": subs,
        }


def build_layout(grid: Grid, n1: int, n2: int, delta: OverlapRule,
                 kappa: Optional[float] = None) -> SubdomainLayout:
    return SubdomainLayout(grid, n1, n2, delta, kappa_interior=kappa)


class PartitionOfUnity:
    """Nodal chi_j values as a product of normalized per-axis profiles."""

    def __init__(self, layout: SubdomainLayout):
        self.layout = layout
        g = layout.grid
        self.ax1_table = self._axis_tables(g.node_x, g.xs_el, layout.plateau_x)
        self.ax2_table = self._axis_tables(g.node_y, g.ys_el, layout.plateau_y)

    @staticmethod
    def _axis_tables(nodes, el_coords, plateaus):
        n = len(plateaus)
        table = np.ones((n, nodes.size))
        for i, (lo, hi) in enumerate(plateaus):
            pts = []
            if i > 0:
                # ramp up across the overlap with the left neighbour
                pts += [(el_coords[lo], 0.0), (el_coords[plateaus[i - 1][1]], 1.0)]
            if i < n - 1:
                # ramp down across the overlap with the right neighbour
                pts += [(el_coords[plateaus[i + 1][0]], 1.0), (el_coords[hi], 0.0)]
            if not pts:
                continue
            xp, fp = [], []
            for x, f in pts:
                if xp and x <= xp[-1]:
                    # both neighbours' plateaus touch here; keep a single peak
                    fp[-1] = max(fp[-1], f)
                    continue
                xp.append(x)
                fp.append(f)
            table[i] = np.interp(nodes, xp, fp)
        table /= table.sum(axis=0)
        return table

    def chi_values(self, j: int, dofs=None) -> np.ndarray:
        i1, i2 = self.layout.slot(j)
        cx, cy = self.ax1_table[i1], self.ax2_table[i2]
        if dofs is None:
            return np.outer(cy, cx).ravel()
        dofs = np.asarray(dofs)
        ndx = self.layout.grid.ndof_x
        return cx[dofs % ndx] * cy[dofs // ndx]


def build_pou(grid: Grid, layout: SubdomainLayout) -> PartitionOfUnity:
    if layout.grid is not grid:
        raise LayoutError("layout was built for a different grid")
    return PartitionOfUnity(layout)


class TransferOps:
    """Restriction to V_{h,j} and weighted extension back to V_h.

    Global vectors live on the interior dofs of the grid (V_h ordering =
    ascending global dof id); local vectors on V_{h,j} in the same order.
    """

    def __init__(self, grid: Grid, layout: SubdomainLayout, pou: PartitionOfUnity):
        self.grid = grid
        self.layout = layout
        self.vh = grid.interior_dofs
        self.positions = []
        self.weights = []
        for j in range(layout.n_subdomains):
            dofs_j = layout.subdomain_dofs(j)
            pos = np.searchsorted(self.vh, dofs_j)
            if pos.size and (pos.max() >= self.vh.size or np.any(self.vh[pos] != dofs_j)):
                raise LayoutError(f"subdomain {j} has dofs outside the global interior set")
            self.positions.append(pos)
            self.weights.append(pou.chi_values(j, dofs_j))

    @property
    def n_global(self) -> int:
        return self.vh.size

    def local_size(self, j: int) -> int:
        return self.positions[j].size


def build_transfer(grid: Grid, layout: SubdomainLayout, pou: PartitionOfUnity) -> TransferOps:
    return TransferOps(grid, layout, pou)


def restrict(ops: TransferOps, j: int, v: np.ndarray) -> np.ndarray:
    return v[ops.positions[j]]


def extend_weighted(ops: TransferOps, j: int, w: np.ndarray) -> np.ndarray:
    out = np.zeros(ops.n_global, dtype=np.result_type(w, np.complex128))
    out[ops.positions[j]] = ops.weights[j] * w
    return out


def accumulate_weighted(ops: TransferOps, j: int, w: np.ndarray, out: np.ndarray) -> None:
    """In-place extend_weighted, used by the iteration inner loops."""
    out[ops.positions[j]] += ops.weights[j] * w
