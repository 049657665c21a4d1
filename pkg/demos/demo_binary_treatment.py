"""
Mis-classified binary treatment
===============================

When the true treatment is binary, mis-classification rates ``alpha0`` and
``alpha1`` determine the slope ``psi = -(alpha0 + alpha1)`` of the error on
the true treatment.  The observed prevalence and the error variance bound
``psi``, and linear equality restrictions on the rates pin it down.
"""

import numpy as np

from ivbelief import binary, identified_set as ids, oracle

# exact moments from the four (T*, T) cells
e = oracle.forward_binary(p_star=0.5, alpha0=0.1, alpha1=0.2)
print(f"observed p={e.p:.3f}  psi={e.psi:.3f}  tau={e.tau:.3f}  var(w)={e.sigma_w_sq:.4f}")

# the feasible psi range tightens as the signal share grows
p, s22 = 0.4, 0.3
print(f"\n{'kappa_tilde':>12} {'psi_low':>9} {'psi_high':>9}")
for k in np.linspace(binary.binary_kappa_floor(s22, p), 1.0, 6):
    lo, hi = binary.psi_bounds(s22, k, p)
    print(f"{k:12.4f} {lo:9.4f} {hi:9.4f}")

# equality restrictions select one psi per kappa_tilde
print()
for c in ("symmetric", "one_sided_alpha0_zero", "one_sided_alpha1_zero", "prevalence_preserving"):
    print(f"{c:>24}: psi = {binary.psi_under_equality(0.8, s22, p, c):+.4f} at kappa_tilde 0.8")

# bounds on beta = (1 + psi) beta_tilde for a binary-treatment covariance
sigma = np.array([[1.0, 0.1, 0.2], [0.1, 0.3, 0.12], [0.2, 0.12, 1.0]])
r = ids.Restrictions(0.5, 1.0, -0.3, 0.3)
lo, hi = binary.beta_bounds_binary(sigma, r, p)
print(f"\nbeta bounds (no equality restriction): [{lo:.4f}, {hi:.4f}]")
lo, hi = binary.beta_bounds_binary(sigma, ids.Restrictions(0.5, 1.0, -0.3, 0.3, "symmetric"), p)
print(f"beta bounds (symmetric rates):          [{lo:.4f}, {hi:.4f}]")
