"""Initial-data recipes: single modes, band-limited noise, files and slow eigenmodes."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import littlewood_paley as lp
from .energy import EnergyConstants, initial_norm
from .errors import ConfigurationError
from .integrator import LinearModeOperator, slow_mode_state
from .model import ModelParams, State
from .spectral import Grid, SpectralField, load_field, save_field, single_mode

RECIPES = ("zero", "single-mode", "random-band", "from-file", "slow-mode")
FIELD_SUFFIXES = {"a": "scalar", "u": "vector", "tau": "sym"}


def zero_state(grid: Grid) -> State:
    return State.zeros(grid)


def single_mode_state(grid: Grid, k, amplitude: float = 1.0, field: str = "u",
                      component: int = 0, phase: str = "sin") -> State:
    """One Fourier mode ``amplitude * sin(k . x / L)`` in a single component."""
    if field not in FIELD_SUFFIXES:
        raise ConfigurationError(f"unknown field {field!r}")
    rank = FIELD_SUFFIXES[field]
    mode = single_mode(grid, k, amplitude, phase)
    parts = {name: SpectralField.zeros(grid, r) for name, r in FIELD_SUFFIXES.items()}
    coeffs = np.zeros_like(parts[field].coeffs)
    if not 0 <= component < coeffs.shape[0]:
        raise ConfigurationError(f"component {component} out of range for {field}")
    coeffs[component] = mode.coeffs[0]
    parts[field] = SpectralField(grid, rank, coeffs)
    return State(parts["a"], parts["u"], parts["tau"])


def default_band_range(frame: lp.DyadicFrame, consts: EnergyConstants) -> tuple[int, int]:
    """``[q1 - 2, q0 + 2]`` clipped to the resolved range."""
    lo = max(consts.q1 - 2, frame.q_min)
    hi = min(consts.q0 + 2, frame.q_max)
    if lo > hi:
        raise ConfigurationError("the default band range misses the resolved range")
    return lo, hi


def normalize(state: State, frame: lp.DyadicFrame, consts: EnergyConstants,
              target: float) -> State:
    """Rescale so that ``X_0 = target`` (the zero state is returned unchanged)."""
    x0 = initial_norm(frame, state, consts.q0)
    if x0 == 0.0:
        return state
    return state.scaled(target / x0)


def random_band_state(frame: lp.DyadicFrame, consts: EnergyConstants, rng: np.random.Generator,
                      target: float, q_range: tuple[int, int] | None = None,
                      base_n: int | None = None) -> State:
    """Band-limited white noise in all three fields, normalised to ``X_0 = target``.

    ``base_n`` draws the noise on a coarser grid and embeds it, so runs at
    several resolutions share one physical initial state.
    """
    lo, hi = q_range or default_band_range(frame, consts)
    a = lp.band_random_field(frame, "scalar", rng, lo, hi, base_n)
    u = lp.band_random_field(frame, "vector", rng, lo, hi, base_n)
    tau = lp.band_random_field(frame, "sym", rng, lo, hi, base_n)
    return normalize(State(a, u, tau), frame, consts, target)


def band_table(frame: lp.DyadicFrame, bands) -> np.ndarray:
    return sum((frame.phi_table(int(q)) for q in bands), np.zeros(frame.grid.shape))


def slow_band_state(op: LinearModeOperator, frame: lp.DyadicFrame, consts: EnergyConstants,
                    rng: np.random.Generator, target: float, bands) -> State:
    """Least-damped eigenvectors on the modes of ``bands``, normalised to ``X_0``."""
    table = (band_table(frame, bands) > 0).astype(float)
    return normalize(slow_mode_state(op, table, rng), frame, consts, target)


def save_state(prefix: str | Path, state: State) -> list[Path]:
    """Write ``prefix.a.obsf``, ``prefix.u.obsf`` and ``prefix.tau.obsf``."""
    paths = []
    for name in FIELD_SUFFIXES:
        path = Path(f"{prefix}.{name}.obsf")
        save_field(path, getattr(state, name), field_id=name)
        paths.append(path)
    return paths


def load_state(prefix: str | Path) -> State:
    fields = {}
    for name, rank in FIELD_SUFFIXES.items():
        f, _ = load_field(f"{prefix}.{name}.obsf")
        if f.rank != rank:
            raise ConfigurationError(f"{prefix}.{name}.obsf holds a {f.rank} field")
        fields[name] = f
    return State(fields["a"], fields["u"], fields["tau"])


def make_initial(recipe: Mapping[str, Any], frame: lp.DyadicFrame, consts: EnergyConstants,
                 params: ModelParams, rng: np.random.Generator,
                 op: LinearModeOperator | None = None) -> State:
    """Build initial data from a recipe dictionary with key ``name``."""
    name = recipe.get("name", "random-band")
    grid = frame.grid
    if name == "zero":
        return zero_state(grid)
    if name == "single-mode":
        return single_mode_state(grid, recipe.get("k", [1] + [0] * (grid.dim - 1)),
                                 float(recipe.get("amplitude", 1.0)), recipe.get("field", "u"),
                                 int(recipe.get("component", 0)), recipe.get("phase", "sin"))
    if name == "random-band":
        q_range = recipe.get("q_range")
        return random_band_state(frame, consts, rng, float(recipe.get("amplitude", 1e-3)),
                                 tuple(q_range) if q_range else None, recipe.get("base_n"))
    if name == "from-file":
        state = load_state(recipe["prefix"])
        if state.grid != grid:
            raise ConfigurationError("snapshot grid differs from the run grid")
        return state
    if name == "slow-mode":
        op = op or LinearModeOperator(params, grid)
        bands = recipe.get("bands") or list(frame.qs)
        return slow_band_state(op, frame, consts, rng, float(recipe.get("amplitude", 1e-3)),
                               bands)
    raise ConfigurationError(f"unknown initial-data recipe {name!r}; known: {RECIPES}")
