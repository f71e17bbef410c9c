"""Ultimate bounds on every solution, checked against simulations.

T can never stay above T0; T(t - tau) + I(t) is bounded by (a Tmax/2 + s)/d;
I and V inherit bounds from it, and with saturation T is bounded below.  We
compare these with the tails of an equilibrium run and an oscillating run.
"""
import numpy as np

from viraldyn import check_permanence, integrate, permanence_bounds, preset
from viraldyn.equilibria import equilibria

pr = preset("fig5")
b = permanence_bounds(pr)
print("bounds:", {k: f"{v:.4g}" for k, v in b.as_dict().items()})

for tau in [0.1, 3.0]:
    p = pr.replace(tau=tau)
    e2 = equilibria(p)[1]
    traj = integrate(p, np.array(e2.state) * 1.1, 2000.0)
    chk = check_permanence(traj, b)
    print(f"\ntau = {tau}: all checks passed = {chk.passed}")
    for c in chk.checks:
        print(f"  {c.name:16s} observed {c.observed:12.5g}  bound {c.bound:12.5g}  margin {c.margin:.3g}")
