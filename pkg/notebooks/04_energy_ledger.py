# %% [markdown]
# # Thresholds, coefficients and band energies
#
# The frequency thresholds `q1 < q0` split the bands into low, mid and high
# regimes. Each regime has its own quadratic functional; the constants are
# chosen at their extremal admissible values and every coefficient
# inequality is re-checked after derivation.

# %%
import numpy as np

from oldroyd_besov import littlewood_paley as lp
from oldroyd_besov.energy import (
    BandEvaluator,
    coefficient_inequalities,
    derive_constants,
    gram_reports,
)
from oldroyd_besov.initial_data import random_band_state
from oldroyd_besov.model import ModelParams
from oldroyd_besov.spectral import Grid

params = ModelParams()
consts = derive_constants(params)
print(consts)

# %% [markdown]
# ## Inequality margins
#
# Several margins are exactly zero: the thresholds are powers of two picked
# at the edge of admissibility, and `Re We = 1` makes the low-regime
# inequalities tight. Those ties print as a few ulps either side of zero;
# the acceptance suite confirms them in rational arithmetic.

# %%
for check in coefficient_inequalities(consts, params):
    print(f"{check.name:24s} margin {check.margin: .3e}  passed {check.passed}")

# %% [markdown]
# ## Gram matrices
#
# The worst-band Gram matrix of each functional must dominate its diagonal
# form (`Y`) or be positive definite (`Ytilde`).

# %%
for rep in gram_reports(consts, params):
    print(f"{rep.functional:6s} {rep.regime:4s} q={rep.q:3d} margin {rep.margin: .3e}")

# %% [markdown]
# ## Band energies of random data

# %%
grid = Grid(2, 128, 8.0)
frame = lp.build_frame(grid)
state = random_band_state(frame, consts, np.random.default_rng(0), 1e-3)
evaluator = BandEvaluator(frame, consts, params)
for band in evaluator.spectrum(state):
    print(f"q={band.q:3d} {band.regime:4s} X={band.X:.3e}")
