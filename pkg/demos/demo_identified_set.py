"""
Identified set of an IV model with a mis-measured treatment
===========================================================

For a fixed reduced-form covariance ``Sigma`` of ``(y, T, z)`` the data
leave the measurement-error share ``kappa_tilde`` and the endogeneity
correlation ``rho`` free.  Each admissible pair pins down the correlation
between the outcome error and the instrument, ``rho_uzeta``, and the causal
effect.  Elicited restrictions on ``(kappa_tilde, rho)`` shrink the set.
"""

import numpy as np

from ivbelief import identified_set as ids

# a reduced-form covariance with a strong first stage
sigma = np.array([[3.0, 2.0, 1.0], [2.0, 2.0, 1.0], [1.0, 1.0, 1.0]])
r12, r13, r23 = ids.correlations(sigma)
big_l = ids.kappa_lower_bound(r12, r13, r23)
print(f"correlations r12={r12:.3f} r13={r13:.3f} r23={r23:.3f}")
print(f"kappa_tilde must exceed L = {big_l:.4f}")

# with no restrictions the instrument-invalidity correlation is bounded on one side only
lo, hi = ids.rho_uzeta_unrestricted_bounds(r12, r13, r23)
print(f"unrestricted rho_uzeta range: ({lo:.4f}, {hi:.4f})")

# a sequence of nested rectangles: the bounds can only shrink
rectangles = [
    ids.Restrictions(0.76, 1.0, -0.9, 0.9),
    ids.Restrictions(0.8, 1.0, -0.5, 0.5),
    ids.Restrictions(0.9, 1.0, 0.0, 0.5),
    ids.Restrictions(0.95, 1.0, 0.1, 0.2),
]
print(f"\n{'kappa_tilde':>14} {'rho':>14} {'rho_uzeta bounds':>22} {'beta bounds':>22}")
for r in rectangles:
    f_lo, f_hi = ids.rho_uzeta_bounds(r12, r13, r23, r)
    b_lo, b_hi = ids.beta_tilde_bounds(sigma, r)
    print(f"[{r.kappa_tilde_lo:.2f}, {r.kappa_tilde_hi:.2f}]  [{r.rho_lo:+.2f}, {r.rho_hi:+.2f}]"
          f"  [{f_lo:+.4f}, {f_hi:+.4f}]  [{b_lo:+.4f}, {b_hi:+.4f}]")

# the IV estimate corresponds to a valid instrument (rho_uzeta = 0)
print(f"\nIV slope s13/s23 = {sigma[0, 2] / sigma[1, 2]:.4f}")

# points on the surface: rho_uzeta as a function of (kappa_tilde, rho)
ks = np.linspace(0.8, 1.0, 3)
rhos = np.array([-0.5, 0.0, 0.5])
grid = ids.rho_uzeta(r12, r13, r23, ks[:, None], rhos[None, :])
print("\nrho_uzeta on a small grid (rows kappa_tilde, columns rho):")
for k, row in zip(ks, grid):
    print(f"  {k:.2f}: " + "  ".join(f"{v:+.4f}" for v in row))
