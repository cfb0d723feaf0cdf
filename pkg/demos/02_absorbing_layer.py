"""
How well does the absorbing layer fake free space?
==================================================

A narrow Gaussian at the center of the unit square radiates outward.  With a
good layer the interior solution should match the outgoing free-space field
of a point source, which we know in closed form.  Switching the layer off
(strength 0) turns the boundary into a hard wall and the agreement collapses.
"""

from helmlab import parse_config, pml_accuracy_test

cfg = parse_config("""
run.k = 25
pml.kind = cubic
pml.kappa = lambda
accuracy.sigma = lambda/32
""")

# relative L2 error against the reference field, measured on an annulus
# at least one wavelength away from the source and half a wavelength
# inside the physical region
report = pml_accuracy_test(cfg)
print(f"k = {report.k:g}")
print(f"  layer on   rel error = {report.rel_err:.3e}")

off = pml_accuracy_test(cfg, strength_override=0.0)
print(f"  layer off  rel error = {off.rel_err:.3e}"
      f"   ({off.rel_err / report.rel_err:.0f}x worse)")

# the layer strength is not fussy: anything within an order of magnitude
# of the default works at this resolution
print()
print("strength sweep at k = 25:")
for a_over_k in (3.0, 10.0, 30.0, 100.0):
    r = pml_accuracy_test(cfg, strength_override=a_over_k * report.k)
    print(f"  a = {a_over_k:>5.0f}k   rel error = {r.rel_err:.3e}")
