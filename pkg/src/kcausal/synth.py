"""Synthetic benchmark system with planted nonlinear causal signals.

Each generated row is an independent realization of a pre-lagged design:
a target block whose lag slots are noisy copies of the time-t value, and
four source blocks whose lag slots switch on, at increasing onset lags, a
sine, a log-magnitude, a random-sign linear, and an exponential image of
the target. A shape-matched all-noise twin supports calibration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["SynthConfig", "generate", "generate_null", "lagged_to_table"]

BLOCK_NAMES = ("X", "Y1", "Y2", "Y3", "Y4")

# Onset lag of each planted source -> target signal.
ONSET_LAGS = {"Y1": 1, "Y2": 2, "Y3": 3, "Y4": 4}

_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class SynthConfig:
    """Benchmark dimensions: rows are independent realizations."""

    n_samples: int = 10_000
    lags: int = 4
    dims: int = 20
    seed: int = 0
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.n_samples < 2:
            raise ConfigError("need at least two realizations")
        if self.dims < 1:
            raise ConfigError("dims must be at least 1")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be nonnegative")


def _require_full_system(cfg: SynthConfig):
    if cfg.lags < 4:
        raise ConfigError("the full benchmark needs lags >= 4 (the exponential signal starts at lag 4)")


def generate(cfg: SynthConfig) -> dict[str, list[np.ndarray]]:
    """Draw the benchmark system; ``result[name][lag]`` is an (N, dims) slot.

    Noise is drawn fresh per lag slot and realization, so the conditioning
    history stays full rank. The random-sign block flips each matrix entry
    independently, which cancels linear correlation while preserving
    dependence. Deterministic given the seed.
    """
    _require_full_system(cfg)
    n, d, k = cfg.n_samples, cfg.dims, cfg.lags
    ns = cfg.noise_scale
    rng = np.random.default_rng(cfg.seed)
    noise = lambda: rng.standard_normal((n, d))

    s = noise()
    blocks: dict[str, list[np.ndarray]] = {}

    blocks["X"] = [s] + [s + 0.1 * i * ns * noise() for i in range(1, k + 1)]

    y1 = [noise()]
    sin_part = np.sin(5.0 * s)
    for i in range(1, k + 1):
        y1.append(sin_part + 0.1 * i * ns * noise())
    blocks["Y1"] = y1

    y2 = [noise(), noise()]
    for j in range(2, k + 1):
        arg = np.abs(s + 0.25 * (j - 1) * ns * noise())
        y2.append(np.log(np.clip(arg, _LOG_FLOOR, None)))
    blocks["Y2"] = y2

    y3 = [noise(), noise(), noise()]
    for j in range(3, k + 1):
        omega = rng.integers(1, 3, size=(n, d))
        signs = np.where(omega % 2 == 0, 1.0, -1.0)
        y3.append(signs * s + 0.2 * (j - 2) * ns * noise())
    blocks["Y3"] = y3

    y4 = [noise(), noise(), noise(), noise()]
    for j in range(4, k + 1):
        y4.append(np.exp(s) + 1.3 * (j - 3) * ns * noise())
    blocks["Y4"] = y4

    return blocks


def generate_null(cfg: SynthConfig) -> dict[str, list[np.ndarray]]:
    """Shape-matched twin with every slot independent standard noise."""
    _require_full_system(cfg)
    n, d, k = cfg.n_samples, cfg.dims, cfg.lags
    rng = np.random.default_rng(cfg.seed)
    return {
        name: [rng.standard_normal((n, d)) for _ in range(k + 1)]
        for name in BLOCK_NAMES
    }


def lagged_to_table(blocks: dict[str, list[np.ndarray]]):
    """Flatten a lagged block set into (matrix, column names, block spec).

    Columns are named ``{block}.l{lag}.{dim}`` and grouped into blocks
    ``{block}.l{lag}``, which round-trips through the CSV interface.
    """
    cols = []
    names = []
    groups: dict[str, list[str]] = {}
    for name in sorted(blocks):
        for lag, mat in enumerate(blocks[name]):
            group = f"{name}.l{lag}"
            groups[group] = []
            for j in range(mat.shape[1]):
                cname = f"{group}.{j}"
                names.append(cname)
                groups[group].append(cname)
                cols.append(mat[:, j])
    return np.column_stack(cols), names, groups
