"""
Finite-element assembly of the stretched Helmholtz sesquilinear form

    a(u, v) = int_Omega k^-2 ((D grad u) . grad conj(v) - (beta . grad u) conj(v))
              - c^-2 u conj(v),

its load vectors, and wavenumber-weighted norms.  The basis is tensor-product
Lagrange of order p with real nodal functions (so conj(v) = v in the element
integrals); entry (i, j) of the matrix is a(phi_j, phi_i).

Assembly is vectorized over elements: for each tensor Gauss-Legendre point
the coefficient values are evaluated per element and combined with the basis
outer products, accumulated into a batch of element matrices, then scattered
into a global sparse matrix with Dirichlet rows/cols dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .grid import Grid, Rect
from .pml import CoefficientField, PmlProfile, global_field


class AssemblyError(ValueError):
    pass


def gauss_points(q: int):
    if q < 1:
        raise AssemblyError(f"quadrature order must be >= 1, got {q}")
    return np.polynomial.legendre.leggauss(q)


def lagrange_basis_1d(p: int, pts: np.ndarray):
    """Values and derivatives of the p+1 equispaced Lagrange functions.

    Nodes are equispaced on [-1, 1]; returns (vals, ders), each of shape
    (len(pts), p+1).
    """
    nodes = np.linspace(-1.0, 1.0, p + 1)
    pts = np.asarray(pts, dtype=np.float64)
    vals = np.ones((pts.size, p + 1))
    ders = np.zeros((pts.size, p + 1))
    for a in range(p + 1):
        for b in range(p + 1):
            if b == a:
                continue
            vals[:, a] *= (pts - nodes[b]) / (nodes[a] - nodes[b])
        # derivative via sum over the omitted factor
        for b in range(p + 1):
            if b == a:
                continue
            term = np.ones_like(pts) / (nodes[a] - nodes[b])
            for m in range(p + 1):
                if m == a or m == b:
                    continue
                term *= (pts - nodes[m]) / (nodes[a] - nodes[m])
            ders[:, a] += term
    return vals, ders


@dataclass(frozen=True)
class SesquilinearSpec:
    """What to assemble: element block, coefficients, constraints, quadrature.

    elements = None means every element of the grid; constrained = None means
    the grid's domain-boundary dofs.  q defaults to p+2 (one extra order over
    exactness for polynomial data, since the stretched coefficients are not
    polynomial inside the layer).
    """

    grid: Grid
    field: CoefficientField
    elements: Optional[np.ndarray] = None
    constrained: Optional[np.ndarray] = None
    q: Optional[int] = None

    def resolved_q(self) -> int:
        q = self.q if self.q is not None else self.grid.p + 2
        if q < self.grid.p + 1:
            raise AssemblyError(f"quadrature order {q} below p+1 = {self.grid.p + 1}")
        return q

    def resolved_elements(self) -> np.ndarray:
        if self.elements is None:
            return np.arange(self.grid.n_elements)
        return np.asarray(self.elements, dtype=np.int64)

    def resolved_constrained(self) -> np.ndarray:
        if self.constrained is None:
            return self.grid.boundary_dofs
        return np.asarray(self.constrained, dtype=np.int64)

    def kept_dofs(self) -> np.ndarray:
        """Unconstrained dofs of the element block, ascending global ids."""
        eldofs = self.grid.element_dofs()[self.resolved_elements()]
        present = np.unique(eldofs)
        mask = np.ones(self.grid.n_dofs, dtype=bool)
        mask[self.resolved_constrained()] = False
        return present[mask[present]]


@dataclass(frozen=True)
class LoadSpec:
    """Source functional <f, v>; f is masked to zero outside its support."""

    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    q: Optional[int] = None
    support: Optional[Rect] = None


def _element_matrices(grid: Grid, field: CoefficientField, elements: np.ndarray, q: int):
    p = grid.p
    nloc = (p + 1) ** 2
    xi, w = gauss_points(q)
    V, Dm = lagrange_basis_1d(p, xi)
    x0, y0 = grid.element_origin(elements)
    hx, hy = grid.hx, grid.hy
    jac = 0.25 * hx * hy
    kinv2 = field.k ** -2

    Ke = np.zeros((elements.size, nloc, nloc), dtype=np.complex128)
    for g2 in range(q):
        yg = y0 + 0.5 * hy * (xi[g2] + 1.0)
        by, dby = V[g2], Dm[g2] * (2.0 / hy)
        for g1 in range(q):
            xg = x0 + 0.5 * hx * (xi[g1] + 1.0)
            bx, dbx = V[g1], Dm[g1] * (2.0 / hx)
            phi = np.kron(by, bx)
            dphx = np.kron(by, dbx)
            dphy = np.kron(dby, bx)
            d1, d2 = field.d_diag_at(xg, yg)
            b1, b2 = field.beta_at(xg, yg)
            ci = field.c_inv_sq_at(xg, yg)
            wt = w[g1] * w[g2] * jac
            # trial index j, test index i; test functions are real
            Ke += np.einsum("e,i,j->eij", wt * kinv2 * d1, dphx, dphx)
            Ke += np.einsum("e,i,j->eij", wt * kinv2 * d2, dphy, dphy)
            Ke -= np.einsum("e,i,j->eij", wt * kinv2 * b1, phi, dphx)
            Ke -= np.einsum("e,i,j->eij", wt * kinv2 * b2, phi, dphy)
            Ke -= np.einsum("e,i,j->eij", (wt * ci).astype(np.complex128), phi, phi)
    return Ke


def assemble_matrix(spec: SesquilinearSpec) -> sp.csr_matrix:
    """Assembled matrix over the spec's unconstrained dofs (ascending)."""
    grid = spec.grid
    elements = spec.resolved_elements()
    if grid.hx <= 0.0 or grid.hy <= 0.0:
        raise AssemblyError("degenerate element geometry")
    Ke = _element_matrices(grid, spec.field, elements, spec.resolved_q())

    nloc = Ke.shape[1]
    eldofs = grid.element_dofs()[elements]
    rows = np.repeat(eldofs, nloc, axis=1).ravel()
    cols = np.tile(eldofs, (1, nloc)).ravel()

    kept = spec.kept_dofs()
    new_id = np.full(grid.n_dofs, -1, dtype=np.int64)
    new_id[kept] = np.arange(kept.size)
    r, c = new_id[rows], new_id[cols]
    keep = (r >= 0) & (c >= 0)
    A = sp.coo_matrix((Ke.ravel()[keep], (r[keep], c[keep])), shape=(kept.size, kept.size))
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_load(grid: Grid, spec: LoadSpec, constrained: Optional[np.ndarray] = None) -> np.ndarray:
    """Load vector, entry i = int f conj(phi_i), over unconstrained dofs."""
    q = spec.q if spec.q is not None else grid.p + 2
    xi, w = gauss_points(q)
    V, _ = lagrange_basis_1d(grid.p, xi)
    elements = np.arange(grid.n_elements)
    x0, y0 = grid.element_origin(elements)
    hx, hy = grid.hx, grid.hy
    jac = 0.25 * hx * hy
    support = spec.support if spec.support is not None else grid.omega_int

    nloc = (grid.p + 1) ** 2
    Fe = np.zeros((elements.size, nloc), dtype=np.complex128)
    for g2 in range(q):
        yg = y0 + 0.5 * hy * (xi[g2] + 1.0)
        for g1 in range(q):
            xg = x0 + 0.5 * hx * (xi[g1] + 1.0)
            fv = np.asarray(spec.f(xg, yg), dtype=np.complex128)
            inside = (
                (xg >= support.x_lo) & (xg <= support.x_hi)
                & (yg >= support.y_lo) & (yg <= support.y_hi)
            )
            fv = np.where(inside, fv, 0.0)
            phi = np.kron(V[g2], V[g1])
            Fe += np.einsum("e,i->ei", (w[g1] * w[g2] * jac) * fv, phi)

    full = np.zeros(grid.n_dofs, dtype=np.complex128)
    np.add.at(full, grid.element_dofs().ravel(), Fe.ravel())
    mask = np.ones(grid.n_dofs, dtype=bool)
    mask[constrained if constrained is not None else grid.boundary_dofs] = False
    return full[mask]


def assemble_local(grid: Grid, layout, j: int, cf_global: CoefficientField):
    """Local matrix A_j over V_{h,j} and the dof map into global ids.

    The local field is the global one re-based so the identity region is the
    subdomain's interior box; the local layer occupies the rest of Omega_j.
    Dofs on the boundary of Omega_j are eliminated (homogeneous Dirichlet).
    """
    from .pml import local_field  # same package; deferred to keep imports flat

    kap = min(layout.kappa_interior)
    field_j = local_field(cf_global, layout.plateau_box(j), kap if kap > 0.0 else None)
    elements = layout.subdomain_elements(j)
    keep = layout.subdomain_dofs(j)
    constrained = np.setdiff1d(layout.closure_dofs(j), keep, assume_unique=True)
    spec = SesquilinearSpec(grid, field_j, elements=elements, constrained=constrained)
    return assemble_matrix(spec), keep


def hk_norm(grid: Grid, v: np.ndarray, s: int, k: float, q: Optional[int] = None) -> float:
    """Wavenumber-weighted Sobolev norm of the FE function with dofs v.

    s = 0 gives the L2 norm; s = 1 adds k^-2 |grad v|^2.  v is a full dof
    vector (all grid dofs).
    """
    if s not in (0, 1):
        raise AssemblyError(f"only s in {{0, 1}} supported, got s={s}")
    v = np.asarray(v)
    if v.shape[0] != grid.n_dofs:
        raise AssemblyError(f"dof vector length {v.shape[0]} != {grid.n_dofs}")
    q = q if q is not None else grid.p + 2
    xi, w = gauss_points(q)
    V, Dm = lagrange_basis_1d(grid.p, xi)
    eldofs = grid.element_dofs()
    ve = v[eldofs]
    hx, hy = grid.hx, grid.hy
    jac = 0.25 * hx * hy

    total = 0.0
    for g2 in range(q):
        by, dby = V[g2], Dm[g2] * (2.0 / hy)
        for g1 in range(q):
            bx, dbx = V[g1], Dm[g1] * (2.0 / hx)
            wt = w[g1] * w[g2] * jac
            vals = ve @ np.kron(by, bx)
            total += wt * float(np.sum(np.abs(vals) ** 2))
            if s >= 1:
                gx = ve @ np.kron(by, dbx)
                gy = ve @ np.kron(dby, bx)
                total += wt * k ** -2 * float(np.sum(np.abs(gx) ** 2 + np.abs(gy) ** 2))
    return float(np.sqrt(total))


def l2_error(grid: Grid, v: np.ndarray, exact: Callable, q: Optional[int] = None) -> float:
    """L2 norm of (FE function with dofs v) - exact over the whole domain."""
    v = np.asarray(v)
    if v.shape[0] != grid.n_dofs:
        raise AssemblyError(f"dof vector length {v.shape[0]} != {grid.n_dofs}")
    q = q if q is not None else grid.p + 3
    xi, w = gauss_points(q)
    V, _ = lagrange_basis_1d(grid.p, xi)
    eldofs = grid.element_dofs()
    ve = v[eldofs]
    elements = np.arange(grid.n_elements)
    x0, y0 = grid.element_origin(elements)
    hx, hy = grid.hx, grid.hy
    jac = 0.25 * hx * hy

    total = 0.0
    for g2 in range(q):
        yg = y0 + 0.5 * hy * (xi[g2] + 1.0)
        for g1 in range(q):
            xg = x0 + 0.5 * hx * (xi[g1] + 1.0)
            vals = ve @ np.kron(V[g2], V[g1])
            diff = vals - exact(xg, yg)
            total += (w[g1] * w[g2] * jac) * float(np.sum(np.abs(diff) ** 2))
    return float(np.sqrt(total))


def embed(grid: Grid, v_kept: np.ndarray, constrained: Optional[np.ndarray] = None) -> np.ndarray:
    """Zero-pad a vector over unconstrained dofs back to all grid dofs."""
    mask = np.ones(grid.n_dofs, dtype=bool)
    mask[constrained if constrained is not None else grid.boundary_dofs] = False
    full = np.zeros(grid.n_dofs, dtype=np.complex128)
    full[mask] = v_kept
    return full


def identity_field(box: Rect, k: float, c=None) -> CoefficientField:
    """Coefficient field with no stretching anywhere inside the box."""
    return global_field(box, PmlProfile.cubic(0.0, max(box.width, box.height)), k, c)
