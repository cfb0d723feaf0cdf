"""
Overlapping Schwarz iterations with absorbing-layer subdomain problems.

Two fixed-point methods on the assembled system A u = f.  The parallel
method corrects the composite iterate with all subdomains at once:

    u <- u + sum_j Rt_j^T A_j^-1 R_j (f - A u).

The sequential method keeps one local field u_j per subdomain and sweeps
through them in prescribed sequences.  Visiting j, the current composite
w = sum_l chi_l u_l supplies the data:

    c_j = A_j^-1 R_j (f - A w),   u_j <- R_j w + c_j,
    w   <- w + Rt_j^T (new u_j - old u_j).

Keeping the whole local field (not just the correction) matters: the blend
of two locally accurate fields is accurate across the overlap, so each sweep
hands the neighbour a clean field instead of leaving a chi*(1-chi) residue
behind.  One sequential iteration is a full pass through every sequence of
the sweep order (forward then backward for strips, four diagonal passes for
checkerboards); one parallel iteration is a single additive correction.

R_j restricts to the subdomain dofs, Rt_j^T extends weighted by the
partition of unity.  Convergence is declared when the residual drops below
tol relative to the load norm; with the default zero initial guess that is
the same as normalizing by the initial residual.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .decomp import PartitionOfUnity, SubdomainLayout, TransferOps, accumulate_weighted, restrict


class SchwarzError(ValueError):
    pass


@dataclass(frozen=True)
class SweepOrder:
    """Subdomain visit sequences; each is a permutation of 0..N-1."""

    sequences: tuple

    def __post_init__(self):
        if not self.sequences:
            raise SchwarzError("sweep order needs at least one sequence")
        n = len(self.sequences[0])
        ref = list(range(n))
        for seq in self.sequences:
            if sorted(seq) != ref:
                raise SchwarzError(f"sweep sequence {list(seq)} is not a permutation of 0..{n - 1}")

    @property
    def n_subdomains(self) -> int:
        return len(self.sequences[0])


def default_sweep_order(layout: SubdomainLayout) -> SweepOrder:
    """Forward+backward for strips; four diagonal passes for checkerboards.

    The checkerboard passes walk x-major (outer) with the inner y index
    ascending and descending, plus the full reverses, so every axis-aligned
    direction is swept both ways.
    """
    n1, n2 = layout.n1, layout.n2
    if layout.is_strip():
        asc = tuple(range(layout.n_subdomains))
        return SweepOrder((asc, asc[::-1]))
    s_up = tuple(i2 * n1 + i1 for i1 in range(n1) for i2 in range(n2))
    s_dn = tuple(i2 * n1 + i1 for i1 in range(n1) for i2 in range(n2 - 1, -1, -1))
    return SweepOrder((s_up, s_up[::-1], s_dn, s_dn[::-1]))


@dataclass(frozen=True)
class SchwarzContext:
    """Everything one iteration needs, fixed for its lifetime.

    A and f live on the global interior dofs (ascending id order, matching
    TransferOps); local_factors[j] factorizes the subdomain matrix over
    V_{h,j} in the same ordering; u_star is the direct global solution used
    for error monitoring.
    """

    A: sp.csr_matrix
    f: np.ndarray
    local_factors: tuple
    transfer: TransferOps
    u_star: np.ndarray
    tol: float = 1e-6
    max_iters: int = 200

    def __post_init__(self):
        n = self.transfer.n_global
        if self.A.shape != (n, n):
            raise SchwarzError(f"matrix shape {self.A.shape} does not match {n} global dofs")
        if self.f.shape != (n,) or self.u_star.shape != (n,):
            raise SchwarzError("vector lengths do not match the global dof count")
        if len(self.local_factors) != self.transfer.layout.n_subdomains:
            raise SchwarzError(
                f"{len(self.local_factors)} factorizations for "
                f"{self.transfer.layout.n_subdomains} subdomains"
            )
        for j, fac in enumerate(self.local_factors):
            if fac.n != self.transfer.local_size(j):
                raise SchwarzError(
                    f"subdomain {j}: factorization size {fac.n} != {self.transfer.local_size(j)} dofs"
                )
        if not (0.0 < self.tol < 1.0):
            raise SchwarzError(f"tolerance must be in (0, 1), got {self.tol}")
        res = np.linalg.norm(self.f - self.A @ self.u_star)
        bound = 1e-10 * np.linalg.norm(self.f)
        if res > bound:
            raise SchwarzError(
                f"reference solution residual {res:.3e} exceeds 1e-10 * ||f|| = {bound:.3e}"
            )


def _local_correction(ctx: SchwarzContext, j: int, r: np.ndarray) -> np.ndarray:
    try:
        return ctx.local_factors[j].solve(restrict(ctx.transfer, j, r))
    except Exception as exc:
        raise SchwarzError(f"subdomain {j} solve failed: {exc}") from exc


def ras_step(ctx: SchwarzContext, u: np.ndarray) -> np.ndarray:
    """One parallel correction; the j-loop is a deterministic reduction."""
    r = ctx.f - ctx.A @ u
    acc = np.zeros(ctx.transfer.n_global, dtype=np.complex128)
    for j in range(ctx.transfer.layout.n_subdomains):
        accumulate_weighted(ctx.transfer, j, _local_correction(ctx, j, r), acc)
    return u + acc


def _init_local_fields(ctx: SchwarzContext, u: np.ndarray) -> list:
    return [restrict(ctx.transfer, j, u)
            for j in range(ctx.transfer.layout.n_subdomains)]


def _rms_pass(ctx: SchwarzContext, w: np.ndarray, fields: list, order: SweepOrder) -> np.ndarray:
    """All sequences of one sweep order, mutating w and the local fields."""
    for seq in order.sequences:
        for j in seq:
            r = ctx.f - ctx.A @ w
            u_j = restrict(ctx.transfer, j, w) + _local_correction(ctx, j, r)
            accumulate_weighted(ctx.transfer, j, u_j - fields[j], w)
            fields[j] = u_j
    return w


def rms_double_sweep(ctx: SchwarzContext, u: np.ndarray, order: Optional[SweepOrder] = None) -> np.ndarray:
    """One full pass from a bare iterate (local fields seeded as u's traces)."""
    if order is None:
        order = default_sweep_order(ctx.transfer.layout)
    if order.n_subdomains != ctx.transfer.layout.n_subdomains:
        raise SchwarzError(
            f"sweep order over {order.n_subdomains} subdomains, "
            f"context has {ctx.transfer.layout.n_subdomains}"
        )
    u = np.array(u, dtype=np.complex128)
    return _rms_pass(ctx, u, _init_local_fields(ctx, u), order)


@dataclass
class IterationTrace:
    """Per-iteration monitors of one run.

    rel_res[n] is ||f - A u^n|| normalized by the n=0 value (so rel_res[0]
    is 1); rel_err[n] the l2 error vs u* normalized the same way; err_res[n]
    the raw ||A(u* - u^n)||, kept unnormalized for rate ratios.  hk_err is
    filled only when the run is asked to monitor the wavenumber-weighted H1
    error.  iterations counts steps actually taken; iterations_to_tol is the
    first n meeting the load-relative tolerance (None if never met).
    """

    method: str
    rel_res: list = field(default_factory=list)
    rel_err: list = field(default_factory=list)
    err_res: list = field(default_factory=list)
    hk_err: Optional[list] = None
    wall_times: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    iterations_to_tol: Optional[int] = None
    u_final: Optional[np.ndarray] = None
    iterates: Optional[list] = None

    def final_rel_res(self) -> float:
        return self.rel_res[-1]


def rate_after(trace: IterationTrace, n: int) -> float:
    """Error-residual reduction ||A(u*-u^n)|| / ||A(u*-u^0)||."""
    if n < 0:
        raise SchwarzError(f"iteration index must be >= 0, got {n}")
    if n >= len(trace.err_res):
        raise SchwarzError(
            f"trace holds {len(trace.err_res)} error-residual entries, need index {n}"
        )
    if n == 0:
        return 1.0
    e0 = trace.err_res[0]
    if e0 == 0.0:
        raise SchwarzError("initial error is zero; rate undefined")
    return trace.err_res[n] / e0


def run_iteration(
    ctx: SchwarzContext,
    method: str,
    order: Optional[SweepOrder] = None,
    u0: Optional[np.ndarray] = None,
    min_iters: int = 0,
    keep_iterates: bool = False,
    hk_monitor=None,
) -> IterationTrace:
    """Iterate until the load-relative residual meets tol (or max iterations).

    method is "RAS" or "RMS".  min_iters forces the trace at least that long
    even after convergence, so rates at a prescribed iteration stay
    available.  hk_monitor, when given, is a callable mapping a global dof
    vector (interior ordering) to a norm; it is applied to u* - u^n.
    Non-convergence is reported in the trace, not raised.
    """
    m = method.upper()
    if m not in ("RAS", "RMS"):
        raise SchwarzError(f"unknown method {method!r}")
    if m == "RMS" and order is None:
        order = default_sweep_order(ctx.transfer.layout)

    n_gl = ctx.transfer.n_global
    u = np.zeros(n_gl, dtype=np.complex128) if u0 is None else np.array(u0, dtype=np.complex128)
    if u.shape != (n_gl,):
        raise SchwarzError(f"initial guess length {u.shape} != {n_gl}")
    fields = _init_local_fields(ctx, u) if m == "RMS" else None

    norm_f = np.linalg.norm(ctx.f)
    denom = norm_f if norm_f > 0.0 else 1.0
    trace = IterationTrace(method=m, hk_err=[] if hk_monitor is not None else None,
                           iterates=[] if keep_iterates else None)

    def record(u_n):
        res = float(np.linalg.norm(ctx.f - ctx.A @ u_n))
        err = ctx.u_star - u_n
        trace.rel_res.append(res)
        trace.rel_err.append(float(np.linalg.norm(err)))
        trace.err_res.append(float(np.linalg.norm(ctx.A @ err)))
        if hk_monitor is not None:
            trace.hk_err.append(float(hk_monitor(err)))
        if keep_iterates:
            trace.iterates.append(u_n.copy())
        return res

    res = record(u)
    res0 = trace.rel_res[0] if trace.rel_res[0] > 0.0 else 1.0
    err0 = trace.rel_err[0] if trace.rel_err[0] > 0.0 else 1.0
    hk0 = None
    if hk_monitor is not None:
        hk0 = trace.hk_err[0] if trace.hk_err[0] > 0.0 else 1.0

    n = 0
    while True:
        if res <= ctx.tol * denom:
            if trace.iterations_to_tol is None:
                trace.iterations_to_tol = n
            if n >= min_iters:
                trace.converged = True
                break
        if n >= ctx.max_iters:
            break
        t0 = time.perf_counter()
        if m == "RAS":
            u = ras_step(ctx, u)
        else:
            u = _rms_pass(ctx, u.copy(), fields, order)
        trace.wall_times.append(time.perf_counter() - t0)
        n += 1
        res = record(u)

    trace.iterations = n
    trace.u_final = u
    trace.rel_res = [r / res0 for r in trace.rel_res]
    trace.rel_err = [e / err0 for e in trace.rel_err]
    if hk_monitor is not None:
        trace.hk_err = [e / hk0 for e in trace.hk_err]
    return trace


def build_context(
    grid,
    layout: SubdomainLayout,
    cf,
    f: np.ndarray,
    tol: float = 1e-6,
    max_iters: int = 200,
) -> SchwarzContext:
    """Assemble and factorize everything a run needs, then drop the global LU.

    f is the load over the grid's interior dofs.  The global factorization is
    used once for u* and released; the subdomain factorizations stay alive in
    the returned context.
    """
    from .assembly import SesquilinearSpec, assemble_local, assemble_matrix
    from .linalg import factorize

    A = assemble_matrix(SesquilinearSpec(grid, cf))
    lu = factorize(A)
    u_star = lu.solve(np.asarray(f, dtype=np.complex128))
    del lu

    pou = PartitionOfUnity(layout)
    transfer = TransferOps(grid, layout, pou)
    factors = []
    for j in range(layout.n_subdomains):
        A_j, dofs_j = assemble_local(grid, layout, j, cf)
        if dofs_j.size != transfer.local_size(j):
            raise SchwarzError(f"subdomain {j}: dof map does not match transfer ops")
        factors.append(factorize(A_j))
    return SchwarzContext(A=A, f=np.asarray(f, dtype=np.complex128),
                          local_factors=tuple(factors), transfer=transfer,
                          u_star=u_star, tol=tol, max_iters=max_iters)
