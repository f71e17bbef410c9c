"""Where does the infection settle, and does it settle at all?

R0 decides whether an infected steady state exists.  Below 1 only the
infection-free state E1 = (T0, 0, 0) is available; above 1 a unique infected
state E2 appears.  This script walks the bundled parameter sets.
"""
from viraldyn import preset, r0, solve_infected, solve_infection_free
from viraldyn.equilibria import NoInfectedEquilibrium

for name in ["fig1", "fig3", "fig5", "fig7c", "fig8"]:
    pr = preset(name)
    e1 = solve_infection_free(pr)
    e2 = solve_infected(pr)
    print(f"{name:6s} R0 = {r0(pr):10.6f}   T0 = {e1.state.t_cells:.6g}")
    if isinstance(e2, NoInfectedEquilibrium):
        print("        no infected equilibrium (R0 <= 1)")
    else:
        T, I, V = e2.state
        print(f"        E2 = ({T:.10g}, {I:.10g}, {V:.10g})   residual {e2.residual:.1e}")

# fig3 sits just above the threshold: E2 is a hair away from E1.
pr = preset("fig3")
gap = solve_infection_free(pr).state.t_cells - solve_infected(pr).state.t_cells
print(f"\nfig3: T0 - T2 = {gap:.4f} cells out of {solve_infection_free(pr).state.t_cells:.4g}")

# Lowering the clearance rate pushes R0 up in proportion (R0's infection term scales with 1/c).
pr = preset("fig5")
for c in [1.2, 2.4, 4.8, 9.6]:
    print(f"fig5 with c = {c:4.1f}:  R0 = {r0(pr.replace(c=c)):.4f}")
