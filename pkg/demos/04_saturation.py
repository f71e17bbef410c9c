"""Stronger incidence saturation moves E2 and delays the Hopf point.

Raising alpha from 0.001 to 0.005 lifts the uninfected level at E2 and pushes
tau0 from about 1.4 to about 33 days.  Delays of 10 to 25 days then still
settle, given enough time; at 35 the orbit is sustained.
"""
import numpy as np

from viraldyn import classify, detect_outcome, integrate, preset
from viraldyn.equilibria import equilibria

for alpha in [0.001, 0.005]:
    pr = preset("fig5", alpha=alpha)
    e2 = equilibria(pr)[1]
    rep = classify(pr, e2)
    T, I, V = e2.state
    print(f"alpha = {alpha}: E2 = ({T:.1f}, {I:.1f}, {V:.1f}), tau0 = {rep.tau0:.3f}")

pr = preset("fig8")
eqs = equilibria(pr)
for tau in [10.0, 15.0, 25.0, 35.0]:
    p = pr.replace(tau=tau)
    for t_end in [1000.0, 20000.0]:
        v = detect_outcome(integrate(p, np.array(eqs[1].state) * 1.1, t_end, step=0.25), eqs)
        extra = f", period {v.period:.1f}" if v.period else ""
        print(f"tau = {tau:4.0f}, t_end = {t_end:6.0f}: {v.label}{extra}")
