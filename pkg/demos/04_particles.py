# %% [markdown]
# # Random walkers with density-dependent waiting times
#
# Each particle waits ``tau_ref / (u**alpha |u_x|**beta + eps)`` and then jumps
# with variance ``2 k2 tau_ref``. With alpha = beta = 0 the cloud is a plain
# random walk and must reproduce the heat kernel.

# %%
import numpy as np

from degenlab.field import box_field, sample
from degenlab.oracle import heat_kernel
from degenlab.params import ModelParams
from degenlab.solver import SolverConfig, solve
from degenlab.walkers import (
    Ensemble, JumpLaw, WalkStats, advance, compare_to_pde, ensemble_moments, estimate_density,
    sample_from_density,
)

grid = box_field(6.0, 0.1)
law = JumpLaw(k2=0.5, tau_ref=0.01)
stats = WalkStats()
ens = advance(Ensemble.point_source(100_000, seed=1), law, ModelParams(alpha=0, beta=0, k2=0.5, theta=3),
              1.0, grid, refresh_every=0.1, stats=stats)
_, var, _, se = ensemble_moments(ens)
kernel = grid.with_values(heat_kernel(grid.axes()[0], 1.0, 0.5))
cmp = compare_to_pde(estimate_density(ens, grid).field, kernel)
print(f"jumps={stats.jumps}  variance={var[0]:.4f} +- {se[0]:.4f} (exact 1)  L1 to kernel={cmp.distance:.4f}")

# %% [markdown]
# Degenerate case: alpha = 1 and no regularization. Particles in empty regions
# never move, and a jump into an empty cell carries zero weight, so the cloud
# keeps the support of the initial data just like the PDE.

# %%
deg = ModelParams(alpha=1, beta=0, theta=1.6)
dgrid = box_field(2.0, 0.05)
u0 = sample(lambda x: np.clip(1 - x[0] ** 2, 0, None) ** 2, dgrid)
pde = solve(u0, SolverConfig(deg, t_end=0.2)).final
cloud = advance(sample_from_density(u0, 100_000, seed=1), JumpLaw(k2=1.0, tau_ref=1e-3), deg, 0.2, dgrid)
cmp = compare_to_pde(estimate_density(cloud, dgrid).field, pde)
print(f"support: walkers {cmp.support_a:.3f}  PDE {cmp.support_b:.3f}   L1 {cmp.distance:.3f}")
