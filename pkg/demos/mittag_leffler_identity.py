"""The Mittag-Leffler eigen-identity and its constant term.

For the Caputo type (nu = 1), D E_mu(lam dPsi^mu) = lam E_mu(lam dPsi^mu).
For nu < 1 the derivative of the constant series term does not vanish and
adds dPsi^(-mu)/Gamma(1 - mu), which this script measures.
"""

from psihilfer import FractionalOrder, GradedMesh, make_preset
from psihilfer.inequalities import ml_identity_sweep

identity = make_preset("identity")
mesh = GradedMesh(1.0, 2048)
print(" L     mu   nu    max rel err   residual - constant term (rel)")
for L in (0.25, 0.5):
    for mu in (0.3, 0.5, 0.7):
        for nu in (0.0, 0.5, 1.0):
            sw = ml_identity_sweep(L, FractionalOrder(mu, nu), identity, mesh)
            resid = sw.lhs - sw.rhs
            if nu < 1:
                corr = abs((resid - sw.constant_term) / sw.constant_term).max()
                extra = f"{corr:.1e}"
            else:
                extra = "(no constant term)"
            print(f"{L:5.2f} {mu:4.1f} {nu:4.1f}    {sw.rel_err.max():.2e}      {extra}")
