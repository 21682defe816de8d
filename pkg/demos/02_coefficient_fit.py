"""Recovering the small-eps expansion coefficients by least squares.

For two equal perpendicular necks of length 2 the MFPT at the disk center
behaves like a/eps + b ln(eps) + c with a = pi/2, b = -1/2 and
c = 3 - (3/4) ln 2. Fitting the asymptotic series reproduces these exactly,
because the expansion has exactly this form. Fitting the boundary-integral
series shows how close the independent solver lands.

Run: python3 demos/02_coefficient_fit.py
"""

from narrowescape.tables import FIT_EXPECTED, fit_series, table_rows

rows = table_rows("fit")
eps = [r["eps"] for r in rows]

print(f"{'':>18}  {'a':>10}  {'b':>10}  {'c':>10}")
print(f"{'exact':>18}  {FIT_EXPECTED[0]:10.6f}  {FIT_EXPECTED[1]:10.6f}  {FIT_EXPECTED[2]:10.6f}")
for column, label in (("u_asym", "asymptotic series"), ("u_bie", "boundary integral")):
    fit = fit_series(eps, [r[column] for r in rows])
    print(f"{label:>18}  {fit.a:10.6f}  {fit.b:10.6f}  {fit.c:10.6f}   (residual {fit.residual:.1e})")

# The same fit is available from the command line:
#   narrowescape table fit --out sweep.csv && narrowescape fit sweep.csv
