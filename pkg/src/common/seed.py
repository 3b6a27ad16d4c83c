"""
Seeding and deterministic quasi-random sequences.

All sampling in the toolkit goes through these helpers so that a seed
fully determines every point set a report was built from.
"""

import math
import random
from typing import Optional

import numpy as np
from scipy.stats import norm, qmc

GOLDEN_RATIO_CONJUGATE = (math.sqrt(5.0) - 1.0) / 2.0


def set_seed(seed: Optional[int]):
    """Function that sets the seed for pseudo-random number generators."""
    if seed is not None:
        random.seed(seed)
        np.random.seed(seed)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def seed_phase(seed: int) -> float:
    """Fractional offset in [0, 1) derived from the seed; seed 0 gives 0."""
    return (seed * GOLDEN_RATIO_CONJUGATE) % 1.0


def halton_points(count: int, dim: int, seed: int = 0) -> np.ndarray:
    """
    ``count`` scrambled Halton points in the unit cube [0, 1)^dim.

    Seed 0 still scrambles, but deterministically.
    """
    if count <= 0:
        return np.zeros((0, dim))
    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    return sampler.random(count)


def box_points(count: int, lo: np.ndarray, hi: np.ndarray, seed: int = 0) -> np.ndarray:
    """Quasi-random points in the axis-aligned box [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return lo + halton_points(count, len(lo), seed) * (hi - lo)


def sphere_directions(count: int, dim: int, seed: int = 0) -> np.ndarray:
    """
    Quasi-uniform unit vectors in R^dim.

    In 2D the directions are equispaced angles rotated by ``seed_phase(seed)``,
    so seed 0 with ``count`` divisible by 4 contains the coordinate axes.
    In higher dimensions Halton points are pushed through the normal
    quantile function and normalized.
    """
    if count <= 0:
        return np.zeros((0, dim))
    if dim == 1:
        signs = np.where(np.arange(count) % 2 == 0, 1.0, -1.0)
        return signs[:, None]
    if dim == 2:
        angles = 2.0 * np.pi * (np.arange(count) + seed_phase(seed)) / count
        directions = np.column_stack([np.cos(angles), np.sin(angles)])
        # exact zeros keep axis directions bit-clean
        directions[np.abs(directions) < 1e-15] = 0.0
        return directions
    cube = halton_points(count, dim, seed)
    cube = np.clip(cube, 1e-12, 1.0 - 1e-12)
    gauss = norm.ppf(cube)
    lengths = np.linalg.norm(gauss, axis=1, keepdims=True)
    lengths[lengths == 0.0] = 1.0
    return gauss / lengths
