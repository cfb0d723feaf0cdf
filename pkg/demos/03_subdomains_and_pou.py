"""
Splitting the grid into overlapping subdomains
==============================================

A layout cuts the interior region into an n1 x n2 grid of boxes, grows each
box by the overlap width, and then appends an extra absorbing extension on
the cut sides.  The partition of unity lives on the overlapping boxes (not
the extensions) and its weights sum to one at every interior dof.
"""

import numpy as np

from helmlab import (
    MeshRule,
    OverlapRule,
    Rect,
    build_grid,
    build_layout,
    build_pou,
    build_transfer,
    extend_weighted,
    restrict,
)

k = 15.0
box = Rect(0.0, 1.0, 0.0, 1.0)
grid = build_grid(box, 2.0 * np.pi / k, k, MeshRule.pollution(1.0), p=2)
print(f"grid: {grid.nx} x {grid.ny} elements, h = {grid.hx:.4f}, "
      f"{grid.n_dofs} dofs")

for n1, n2 in ((1, 2), (2, 2)):
    layout = build_layout(grid, n1, n2, OverlapRule.layers(2))
    print(f"\nlayout {n1}x{n2}, overlap = 2 element layers:")
    for j in range(layout.n_subdomains):
        pb = layout.plateau_box(j)
        eb = layout.extended_box(j)
        print(f"  subdomain {j}: overlapping box [{pb.x_lo:.3f},{pb.x_hi:.3f}]"
              f"x[{pb.y_lo:.3f},{pb.y_hi:.3f}]"
              f"  with extension [{eb.x_lo:.3f},{eb.x_hi:.3f}]"
              f"x[{eb.y_lo:.3f},{eb.y_hi:.3f}]")

    pou = build_pou(grid, layout)
    total = sum(pou.chi_values(j) for j in range(layout.n_subdomains))
    print(f"  partition of unity: max |sum chi - 1| = "
          f"{np.abs(total - 1.0).max():.2e}")

    # restrict to the subdomains, weight, and scatter back: the identity
    ops = build_transfer(grid, layout, pou)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(ops.n_global) + 1j * rng.standard_normal(ops.n_global)
    back = sum(extend_weighted(ops, j, restrict(ops, j, v))
               for j in range(layout.n_subdomains))
    print(f"  weighted scatter/gather round trip: max error = "
          f"{np.abs(back - v).max():.2e}")
