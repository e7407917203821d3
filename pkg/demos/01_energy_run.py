"""One run on the unit square and the energy bookkeeping around it.

The energy identity says d/dt (1/2)||u||^2 equals minus the boundary losses at
x = 0 and y = B. We march the default datum and compare the two sides.
"""

import numpy as np

import zkrect as z

d = z.RectDomain(1.0, 1.0, 33, 33)
A = z.assemble(d)
u0 = z.sample_initial(z.InitialCondition(), d)
run = z.simulate(u0, A, z.MarchConfig(dt=1e-3, T=2.0))

print(f"||u0||^2 = {run.l2sq0:.5f}, ||u(T)||^2 = {run.l2sq[-1]:.3e}")
print(f"largest increase of ||u||^2 per step: {np.diff(run.l2sq).max():.2e}")

# where the energy goes: 2 * Phi should roughly match what was lost
lost = run.l2sq0 - run.l2sq[-1]
print(f"energy lost {lost:.5f}   2*Phi {2 * z.phi(run):.5f}")

bound = z.check_apriori_bound(run)
obs = z.check_observability(run)
print(f"a priori bound: holds={bound.holds}, slack/||u0||^2 = {bound.normalized_slack:.3f}")
print(f"observability:  holds={obs.holds}, slack/||u0||^2 = {obs.normalized_slack:.4f}")
print(f"identity residuals: I {z.check_estimate_I(run).max_residual:.3f}, II {z.check_estimate_II(run).max_residual:.3f}")
