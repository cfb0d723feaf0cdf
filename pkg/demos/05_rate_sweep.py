"""
Reduction rate as the wavenumber grows
======================================

For each k the residual reduction factor is read off at the designated
iteration and written to a small CSV.  The same sweep is available from the
command line as

    helmlab rate --config sweep.cfg --out outdir/

which writes outdir/rate.csv, and the full per-cell table (one row per
method/layout/overlap combination, with iteration counts and timings) as

    helmlab table --config sweep.cfg --out outdir/
"""

import tempfile
from pathlib import Path

from helmlab import parse_config, run_rate

cfg = parse_config("""
run.k = 10, 15, 20, 25
layout.n = 1x2
layout.overlap = layers:2
""")

out = Path(tempfile.mkdtemp()) / "rates.csv"
records = run_rate(cfg, out_csv=str(out))

for rec in records:
    print(f"k = {rec['k']:>4g}   rho_RAS = {rec['rho_RAS']:.3e}   "
          f"rho_RMS = {rec['rho_RMS']:.3e}")

print(f"\nwrote {out}:")
print(out.read_text())
