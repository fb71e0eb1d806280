# %% [markdown]
# # Spectral fields on the periodic box
#
# Scalar, vector and symmetric-tensor fields live as Fourier coefficients on
# a grid with `N` points per axis over a box of side `2*pi*L`. This notebook
# checks the differential operators against closed forms and shows the Leray
# split of a velocity into its gradient and divergence-free parts.

# %%
import numpy as np

from oldroyd_besov.spectral import (
    Grid,
    SpectralField,
    div,
    grad,
    l2_norm,
    laplacian,
    leray_P,
    leray_Pperp,
    random_field,
    single_mode,
)

grid = Grid(2, 64, 1.0)
print(grid.shape, "max dealiased |xi| =", grid.max_dealiased_xi)

# %% [markdown]
# A single mode `sin(3 x1)` is an eigenfunction of the Laplacian with
# eigenvalue `-9`; over the box `[0, 2 pi)^2` its L2 norm is `2 pi / sqrt(2)`.

# %%
f = single_mode(grid, [3, 0])
print("laplacian residual:", l2_norm(laplacian(f) + 9.0 * f))
print("L2 norm:", l2_norm(f), "expected:", 2 * np.pi / np.sqrt(2))

# %% [markdown]
# ## Leray split
#
# `P u` is divergence free, `Pperp u` is a gradient, and the two parts are
# orthogonal and add up to `u`.

# %%
rng = np.random.default_rng(0)
u = random_field(grid, "vector", rng)
pu, qu = leray_P(u), leray_Pperp(u)
print("div P u:", l2_norm(div(pu)))
print("reconstruction:", l2_norm(pu + qu - u) / l2_norm(u))
print("Pythagoras:", l2_norm(pu) ** 2 + l2_norm(qu) ** 2 - l2_norm(u) ** 2)

# %% [markdown]
# The gradient of a scalar is untouched by `Pperp`.

# %%
a = random_field(grid, "scalar", rng)
g = grad(a)
print("Pperp grad a - grad a:", l2_norm(leray_Pperp(g) - g) / l2_norm(g))
print("zero field norm:", l2_norm(SpectralField.zeros(grid, "sym")))
