"""Isolated electrodiffusion: two ion humps relaxing toward equilibrium.

Runs a reduced version of the smooth benchmark (n=20 instead of 40, shorter
horizon) with both schemes and prints the invariant record: bounds stay
inside the initial range, both masses freeze, and the entropy decays.
"""

from pnpfem import BoundarySpec, Scenario, SolverConfig, run
from pnpfem.scenarios import smooth_n0, smooth_p0

for algorithm in (1, 2):
    scenario = Scenario(
        f"smooth-alg{algorithm}",
        ("square", 20),
        (smooth_p0, smooth_n0, "averaged"),
        BoundarySpec(),                      # isolated: pure Neumann
        SolverConfig(algorithm=algorithm, k=1e-3, T=0.05),
    )
    result = run(scenario)
    first, last = result.initial_report, result.reports[-1]
    lo, hi = result.bounds
    worst_lo = min(min(r.min_p, r.min_n) for r in result.reports)
    worst_hi = max(max(r.max_p, r.max_n) for r in result.reports)

    print(f"scheme {algorithm}: {len(result.reports)} steps")
    print(f"  initial range   [{lo:.2e}, {hi:.4f}]")
    print(f"  worst excursion [{worst_lo - lo:+.1e}, {worst_hi - hi:+.1e}] "
          f"(never leaves the range)")
    print(f"  mass p drift    {abs(last.mass_p - first.mass_p):.1e}")
    print(f"  mass n drift    {abs(last.mass_n - first.mass_n):.1e}")
    print(f"  entropy         {first.entropy:.5f} -> {last.entropy:.5f}, "
          f"monotone: {all(r.entropy_ok for r in result.reports)}")
    print(f"  max |p| peak    {first.max_p:.3f} -> {last.max_p:.3f} "
          f"(diffusion flattens the humps)")
    print()
