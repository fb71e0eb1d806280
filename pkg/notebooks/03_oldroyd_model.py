# %% [markdown]
# # The compressible Oldroyd-B system on packed states
#
# A state holds the density perturbation `a`, the velocity `u` and the
# symmetric stress `tau`. The right-hand side splits into the constant
# coefficient linear part and the nonlinear remainder; we evaluate both and
# check two structural facts: the linear part decays a transverse shear at
# rate `(1 - omega)/Re |xi|^2`, and the nonlinear part is quadratic at small
# amplitude.

# %%
import numpy as np

from oldroyd_besov.initial_data import single_mode_state
from oldroyd_besov.model import (
    I_values,
    K_tilde_values,
    ModelParams,
    State,
    nonlinear_terms,
    rhs_linear,
)
from oldroyd_besov.spectral import Grid, l2_norm, random_field

params = ModelParams(Re=1.0, We=1.0, omega=0.5)
grid = Grid(2, 32, 1.0)

# %% [markdown]
# ## Coefficient functions
#
# `I(a) = a / (1 + a)` and, for the pressure `rho^2`, `K~(a)` vanishes at
# `a = 0`.

# %%
a = np.array([0.0, 0.5, 1.0])
print("I:", I_values(a))
print("K~:", K_tilde_values(a, params))

# %% [markdown]
# ## Shear decay
#
# `u1 = sin(x2)` is divergence free; without stress its only linear forcing
# is the viscous term.

# %%
shear = single_mode_state(grid, (0, 1), field="u", component=0)
rate = -l2_norm(rhs_linear(shear, params).u) / l2_norm(shear.u)
print("decay rate:", rate, "expected:", -(1 - params.omega) / params.Re)

# %% [markdown]
# ## Quadratic scaling of the nonlinear part

# %%
rng = np.random.default_rng(2)
base = State(*(random_field(grid, r, rng) for r in ("scalar", "vector", "sym")))
base = base.scaled(0.1 / max(np.abs(base.u.real()).max(), 1e-300))
for eps in (1e-2, 1e-3, 1e-4):
    n = nonlinear_terms(base.scaled(eps), params)
    size = np.sqrt(sum(l2_norm(f) ** 2 for f in (n.a, n.u, n.tau)))
    print(f"eps={eps:.0e}  |N|/eps^2 = {size / eps ** 2:.6f}")
