"""Seeded instance generators.  Every function is a pure function of its arguments."""

from __future__ import annotations

import numpy as np

from .applications import HullSystem
from .errors import InputError


def _unit_columns(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    g = rng.standard_normal((m, n))
    norms = np.linalg.norm(g, axis=0)
    # A zero Gaussian column has probability zero; redraw rather than divide by it.
    while np.any(norms == 0.0):
        bad = norms == 0.0
        g[:, bad] = rng.standard_normal((m, int(bad.sum())))
        norms = np.linalg.norm(g, axis=0)
    return g / norms


def gen_komlos(n: int, m: int, seed: int) -> np.ndarray:
    """``m x n`` matrix of columns drawn uniformly from the unit sphere."""
    if n < 1 or m < 1:
        raise InputError("n and m must be positive")
    return _unit_columns(np.random.default_rng(seed), m, n)


def gen_beck_fiala(n: int, m: int, t: int, seed: int) -> np.ndarray:
    """Columns with exactly ``t`` ones in random rows, scaled by ``1/sqrt(t)``."""
    if not 1 <= t <= m:
        raise InputError(f"need 1 <= t <= m, got t={t}, m={m}")
    rng = np.random.default_rng(seed)
    out = np.zeros((m, n))
    for j in range(n):
        out[rng.permutation(m)[:t], j] = 1.0
    return out / np.sqrt(t)


def gen_orthonormal(n: int) -> np.ndarray:
    return np.eye(n)


def gen_duplicated(n: int, m: int, copies: int, seed: int) -> np.ndarray:
    """Dependent stress case: ``ceil(n / copies)`` random unit vectors, each repeated."""
    if copies < 1:
        raise InputError("copies must be positive")
    base = gen_komlos(-(-n // copies), m, seed)
    return np.repeat(base, copies, axis=1)[:, :n]


def gen_hull_system(n: int, m: int, k_points: int, seed: int) -> HullSystem:
    """Random sets of ``k_points`` unit vectors, each with 0 in its convex hull.

    The first ``k_points - 1`` points are uniform on the sphere with random
    positive weights; the last point is the unit vector opposite their
    weighted sum, weighted by that sum's length, which balances the set.
    With ``k_points == 2`` this gives antipodal pairs at weights (1/2, 1/2).
    """
    if k_points < 2:
        raise InputError("k_points must be at least 2")
    rng = np.random.default_rng(seed)
    points, coeffs = [], []
    for _ in range(n):
        p = _unit_columns(rng, m, k_points - 1).T
        w = rng.uniform(0.5, 1.5, size=k_points - 1) if k_points > 2 else np.ones(1)
        s = w @ p
        norm = float(np.linalg.norm(s))
        if norm < 1e-12:
            last, w_last = np.zeros(m), 0.0
        else:
            last, w_last = -s / norm, norm
        pts = np.vstack([p, last])
        c = np.append(w, w_last)
        points.append(pts)
        coeffs.append(c / c.sum())
    return HullSystem(points, coeffs)
