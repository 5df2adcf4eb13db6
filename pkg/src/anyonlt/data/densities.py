from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from anyonlt.errors import InvalidInputError
from anyonlt.methods.covering import DensityGrid

log = logging.getLogger(__name__)

GENERATORS = ("uniform", "gaussian", "two-bump")


def generate_density(
    kind: str,
    *,
    n_nodes: int = 41,
    extent: float = 10.0,
    total_mass: float = 400.0,
    seed: int = 0,
    jitter: float = 0.0,
) -> DensityGrid:
    """
    Built-in densities on [0, extent]² sampled at n_nodes per axis.
    `jitter` multiplies every sample by (1 + jitter·U[-1, 1]) from a seeded generator;
    samples are then rescaled so the grid carries `total_mass`.
    """
    if kind not in GENERATORS:
        raise InvalidInputError(f"unknown density {kind!r}; expected one of {', '.join(GENERATORS)}")
    if n_nodes < 5 or not extent > 0 or not total_mass > 0:
        raise InvalidInputError("need n_nodes >= 5, extent > 0 and total_mass > 0")
    if not 0 <= jitter < 1:
        raise InvalidInputError(f"jitter must lie in [0, 1), got {jitter}")
    h = extent / (n_nodes - 1)
    t = np.linspace(0.0, extent, n_nodes)
    yy, xx = np.meshgrid(t, t, indexing="ij")
    c = 0.5 * extent
    if kind == "uniform":
        values = np.ones_like(xx)
    elif kind == "gaussian":
        s = 0.15 * extent
        values = np.exp(-((xx - c) ** 2 + (yy - c) ** 2) / (2 * s**2))
    else:
        s = 0.1 * extent
        a, b = 0.3 * extent, 0.7 * extent
        values = np.exp(-((xx - a) ** 2 + (yy - a) ** 2) / (2 * s**2)) + 0.6 * np.exp(
            -((xx - b) ** 2 + (yy - b) ** 2) / (2 * s**2)
        )
    if jitter:
        rng = np.random.default_rng(seed)
        values = values * (1.0 + jitter * rng.uniform(-1.0, 1.0, size=values.shape))
    grid = DensityGrid(values=values, spacing=h)
    return DensityGrid(values=values * (total_mass / grid.total_mass), spacing=h)


def load_density_csv(path: str | Path) -> DensityGrid:
    """(x, y, value) rows on a uniform grid with equal spacing in both directions."""
    df = pd.read_csv(path)
    missing = {"x", "y", "value"} - set(df.columns)
    if missing:
        raise InvalidInputError(f"{path}: missing columns {sorted(missing)}")
    xs = np.sort(df["x"].unique())
    ys = np.sort(df["y"].unique())
    if len(df) != len(xs) * len(ys):
        raise InvalidInputError(f"{path}: rows do not form a full grid ({len(df)} != {len(xs)}x{len(ys)})")
    hx, hy = np.diff(xs), np.diff(ys)
    h = float(hx[0]) if len(hx) else 0.0
    if not (np.allclose(hx, h, rtol=1e-9) and np.allclose(hy, h, rtol=1e-9)):
        raise InvalidInputError(f"{path}: grid spacing is not uniform and equal in x and y")
    table = df.pivot(index="y", columns="x", values="value").sort_index().sort_index(axis=1)
    log.debug("loaded density %s with shape %s", path, table.shape)
    return DensityGrid(values=table.to_numpy(float), spacing=h, origin=(float(xs[0]), float(ys[0])))


def dump_density_csv(density: DensityGrid, path: str | Path) -> None:
    yy, xx = np.meshgrid(density.ys, density.xs, indexing="ij")
    pd.DataFrame({"x": xx.ravel(), "y": yy.ravel(), "value": density.values.ravel()}).to_csv(
        path, index=False, float_format="%.12g"
    )
