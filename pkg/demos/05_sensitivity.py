"""Which constant moves R0 the most?

The normalised index S_x = (x/R0) dR0/dx reads as "percent change of R0 per
percent change of x".  At the fig5 baseline R0 is dominated by the infection
term b p T0 / (c mu), so b, p, c, mu and Tmax (through T0) sit near +-1
while a, d and s barely register.
"""
from viraldyn import full_report, preset

rep = full_report(preset("fig5"), method="analytic")
for name, value, method in sorted(rep.rows(), key=lambda r: -abs(r[1])):
    bar = "#" * int(round(40 * abs(value)))
    print(f"{name:>6} {value:+.5f} {bar}  [{method}]")

print()
print(rep.to_csv())
