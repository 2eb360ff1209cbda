"""Mesh-refinement study for the deterministic IP-DG Helmholtz solver.

Solves the constant-coefficient problem with impedance data manufactured
from an exact plane wave and tabulates L2 and broken-H1 errors under
uniform refinement.  Expected rates for degree r = 1 are 2 and 1.
"""
import numpy as np

from randhelm import RunConfig, StudySpec, run_manufactured_convergence

spec = StudySpec(
    kind="manufactured_convergence",
    base=RunConfig(k=5.0, degree=1),
    mesh_sizes=(10, 20, 40, 80),
)
rows = run_manufactured_convergence(spec)

print(f"{'n':>4} {'h':>8} {'L2 error':>12} {'rate':>6} {'H1 error':>12} {'rate':>6}")
for r in rows:
    rl = "" if np.isnan(r["rate_l2"]) else f"{r['rate_l2']:6.2f}"
    rh = "" if np.isnan(r["rate_h1"]) else f"{r['rate_h1']:6.2f}"
    print(f"{r['n']:>4} {r['h']:>8.4f} {r['err_l2']:>12.4e} {rl:>6} {r['err_h1']:>12.4e} {rh:>6}")
