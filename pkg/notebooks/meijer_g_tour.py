"""
Evaluating Meijer G-functions
=============================

Walk through the two evaluation routes, their error estimates and the
perturbation used when poles coincide. Run with ``python meijer_g_tour.py``.
"""

import numpy as np
from scipy import special

from rissec.meijerg import ConvergenceError, MeijerG, MeijerGSpec, meijer_g

# G^{1,0}_{0,1}(z | -; 0) is exp(-z)
expo = MeijerG(MeijerGSpec(1, 0, (), (0.0,)))
z = np.array([0.1, 1.0, 5.0, 20.0])
value, err, method, perturbed = expo.evaluate(z)
print("exp(-z) kernel")
for zi, v, e, m in zip(z, value, err, method):
    print(f"  z={zi:5.1f}  G={v:.15e}  exact={np.exp(-zi):.15e}  err~{e:.1e}  via {MeijerG.METHODS[m]}")

# the residue series and the contour integral agree where both apply
spec = MeijerGSpec(3, 1, (1.0, 2.21), (1.21, 2.296, 1.0, 0.0))
for zi in (0.3, 3.0, 30.0):
    s = meijer_g(spec, zi, method="slater")
    c = meijer_g(spec, zi, method="mellin_barnes")
    print(f"z={zi:5.1f}  series={s.value:.14e}  contour={c.value:.14e}  rel diff={abs(s.value / c.value - 1):.1e}")

# b = (0, 0) is a double pole; the series splits it by a small epsilon
k0 = MeijerGSpec(2, 0, (), (0.0, 0.0))
for eps in (1e-5, 5e-6):
    rep = meijer_g(k0, 2.0, method="slater", epsilon=eps)
    print(f"eps={eps:.0e}  G={rep.value:.12f}  2 K0(2 sqrt 2)={2 * special.k0(2 * np.sqrt(2.0)):.12f}"
          f"  perturbed={rep.perturbation_applied}")

# forcing a route outside its domain is reported rather than silently wrong
try:
    meijer_g(MeijerGSpec(1, 0, (), (0.0,)), 40.0, method="mellin_barnes")
except ConvergenceError as exc:
    print("contour route at z=40:", exc)
