"""Schwarz iterations: step identities, sweep semantics, trace bookkeeping."""

import numpy as np
import pytest

from helmlab.assembly import LoadSpec, assemble_load
from helmlab.decomp import OverlapRule, build_layout, extend_weighted, restrict
from helmlab.grid import MeshRule, Rect, build_grid
from helmlab.pml import PmlProfile, global_field
from helmlab.schwarz import (
    SchwarzContext,
    SchwarzError,
    SweepOrder,
    build_context,
    default_sweep_order,
    ras_step,
    rate_after,
    rms_double_sweep,
    run_iteration,
)

UNIT = Rect(0.0, 1.0, 0.0, 1.0)


def _setup(n1, n2, k=20.0, overlap=2, h_const=1.0, tol=1e-6):
    grid = build_grid(UNIT, 2 * np.pi / k, k, MeshRule.pollution(h_const), p=2)
    cf = global_field(UNIT, PmlProfile.cubic(30.0 * k, max(grid.kappa_x, grid.kappa_y)), k)
    sig = (2 * np.pi / k) / 8.0
    amp = 1.0 / (2 * np.pi * sig**2)
    f = assemble_load(
        grid,
        LoadSpec(lambda x, y: amp * np.exp(-((x - 0.5) ** 2 + (y - 0.5) ** 2) / (2 * sig**2)),
                 support=UNIT),
    )
    layout = build_layout(grid, n1, n2, OverlapRule.layers(overlap))
    return build_context(grid, layout, cf, f, tol=tol)


CTX_12 = _setup(1, 2)
CTX_14 = _setup(1, 4)
CTX_22 = _setup(2, 2)


def test_exact_solution_is_fixed_point():
    u1 = ras_step(CTX_12, CTX_12.u_star)
    scale = np.linalg.norm(CTX_12.u_star)
    assert np.linalg.norm(u1 - CTX_12.u_star) < 1e-10 * scale
    u2 = rms_double_sweep(CTX_12, CTX_12.u_star)
    assert np.linalg.norm(u2 - CTX_12.u_star) < 1e-10 * scale


def test_single_subdomain_converges_in_one_step():
    ctx = _setup(1, 1)
    u = ras_step(ctx, np.zeros_like(ctx.f))
    assert np.linalg.norm(u - ctx.u_star) < 1e-10 * np.linalg.norm(ctx.u_star)


def test_ras_step_equals_explicit_weighted_sum():
    """One step from any iterate is u + sum_j Rt_j A_j^-1 R_j (f - A u)."""
    ctx = CTX_12
    rng = np.random.default_rng(2)
    u = rng.standard_normal(ctx.f.shape[0]) + 1j * rng.standard_normal(ctx.f.shape[0])
    u *= np.linalg.norm(ctx.u_star) / np.linalg.norm(u)
    stepped = ras_step(ctx, u)
    r = ctx.f - ctx.A @ u
    expected = u.copy()
    for j in range(ctx.transfer.layout.n_subdomains):
        c_j = ctx.local_factors[j].solve(restrict(ctx.transfer, j, r))
        expected += extend_weighted(ctx.transfer, j, c_j)
    assert np.linalg.norm(stepped - expected) <= 1e-13 * np.linalg.norm(expected)


def test_ras_step_is_affine():
    ctx = CTX_22
    rng = np.random.default_rng(3)
    n = ctx.f.shape[0]
    u1 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    u2 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    a = 0.3
    lhs = ras_step(ctx, a * u1 + (1 - a) * u2)
    rhs = a * ras_step(ctx, u1) + (1 - a) * ras_step(ctx, u2)
    assert np.linalg.norm(lhs - rhs) <= 1e-11 * np.linalg.norm(rhs)


def test_rms_single_pass_matches_manual_state_updates():
    """The double sweep is visit-by-visit: correct, swap in, carry the field."""
    ctx = CTX_12
    u0 = np.zeros_like(ctx.f)
    order = default_sweep_order(ctx.transfer.layout)
    swept = rms_double_sweep(ctx, u0, order)

    w = u0.copy()
    fields = [restrict(ctx.transfer, j, w) for j in range(2)]
    for seq in order.sequences:
        for j in seq:
            r = ctx.f - ctx.A @ w
            u_j = restrict(ctx.transfer, j, w) + ctx.local_factors[j].solve(
                restrict(ctx.transfer, j, r)
            )
            w[ctx.transfer.positions[j]] += ctx.transfer.weights[j] * (u_j - fields[j])
            fields[j] = u_j
    assert np.linalg.norm(swept - w) <= 1e-13 * max(1.0, np.linalg.norm(w))


def test_rms_depends_on_sweep_order():
    ctx = CTX_14
    u0 = np.zeros_like(ctx.f)
    fwd = default_sweep_order(ctx.transfer.layout)
    alt = SweepOrder(sequences=((2, 0, 3, 1), (1, 3, 0, 2)))
    a = rms_double_sweep(ctx, u0, fwd)
    b = rms_double_sweep(ctx, u0, alt)
    assert np.linalg.norm(a - b) > 1e-6 * np.linalg.norm(a)


def test_default_sweep_orders():
    strip = default_sweep_order(CTX_14.transfer.layout)
    assert strip.sequences == ((0, 1, 2, 3), (3, 2, 1, 0))
    cb = default_sweep_order(CTX_22.transfer.layout)
    assert len(cb.sequences) == 4
    for seq in cb.sequences:
        assert sorted(seq) == [0, 1, 2, 3]
    # every sequence and its reverse are both present
    seqs = set(cb.sequences)
    for seq in cb.sequences:
        assert tuple(reversed(seq)) in seqs


def test_sweep_order_validation():
    with pytest.raises(SchwarzError):
        SweepOrder(sequences=((0, 1, 1),))
    with pytest.raises(SchwarzError):
        SweepOrder(sequences=())


def test_run_iteration_counts_and_trace():
    trace = run_iteration(CTX_12, "RAS")
    assert trace.converged
    assert trace.iterations_to_tol is not None and 1 <= trace.iterations_to_tol <= 12
    assert trace.rel_res[0] == 1.0
    assert trace.rel_err[0] == 1.0
    assert trace.final_rel_res() <= CTX_12.tol
    assert len(trace.wall_times) == trace.iterations
    # residual history decreases overall
    assert trace.rel_res[-1] < trace.rel_res[0]


def test_run_iteration_rms_uses_persistent_state():
    trace = run_iteration(CTX_12, "RMS")
    assert trace.converged
    assert trace.iterations_to_tol <= 3
    # first iteration equals one double sweep from the same start
    one = rms_double_sweep(CTX_12, np.zeros_like(CTX_12.f))
    trace1 = run_iteration(CTX_12, "RMS", min_iters=0, keep_iterates=True)
    assert np.linalg.norm(trace1.iterates[1] - one) <= 1e-12 * np.linalg.norm(one)


def test_exact_initial_guess_stops_at_zero_iterations():
    trace = run_iteration(CTX_12, "RAS", u0=CTX_12.u_star)
    assert trace.iterations_to_tol == 0
    assert trace.converged
    assert trace.iterations == 0


def test_min_iters_extends_the_trace():
    trace = run_iteration(CTX_12, "RMS", min_iters=4)
    assert trace.iterations >= 4
    assert len(trace.err_res) >= 5
    assert trace.iterations_to_tol <= 3


def test_max_iters_caps_without_raising():
    ctx = _setup(1, 2, tol=1e-30)
    trace = run_iteration(ctx, "RAS")
    assert not trace.converged
    assert trace.iterations == ctx.max_iters


def test_rate_after_reads_trace():
    trace = run_iteration(CTX_12, "RAS", min_iters=2)
    rho = rate_after(trace, 2)
    assert rho == pytest.approx(trace.err_res[2] / trace.err_res[0], rel=1e-15)
    assert rate_after(trace, 0) == 1.0
    with pytest.raises(SchwarzError):
        rate_after(trace, len(trace.err_res))


def test_method_name_validation():
    with pytest.raises(SchwarzError):
        run_iteration(CTX_12, "GMRES")


def test_context_validation():
    ctx = CTX_12
    with pytest.raises(SchwarzError):
        SchwarzContext(A=ctx.A, f=ctx.f, local_factors=ctx.local_factors[:1],
                       transfer=ctx.transfer, u_star=ctx.u_star)
    with pytest.raises(SchwarzError):
        SchwarzContext(A=ctx.A, f=ctx.f, local_factors=ctx.local_factors,
                       transfer=ctx.transfer, u_star=np.zeros_like(ctx.u_star))


def test_methods_agree_on_the_limit():
    """Both iterations converge to the direct solve of the same system."""
    for ctx in (CTX_12, CTX_22):
        for method in ("RAS", "RMS"):
            trace = run_iteration(ctx, method)
            assert trace.converged, (method, ctx.transfer.layout.n_subdomains)
            err = np.linalg.norm(trace.u_final - ctx.u_star)
            assert err <= 1e-4 * np.linalg.norm(ctx.u_star)
