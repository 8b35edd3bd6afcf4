"""Applications built on the walk: Komlos colorings, l_p discrepancy,
colorings from a gamma_2 factorization, and one-point-per-set selection
from sets whose convex hulls contain the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalError
from .linalg import TOL_NORM, as_vector_set
from .walk import Instance, Trace, _as_rng, run_walk


def komlos_color(vectors, rng=None) -> tuple[np.ndarray, float]:
    """Color the columns starting from ``x0 = 0``; returns ``(x, ||V x||_inf)``."""
    inst = Instance.centered(vectors)
    x, _ = run_walk(inst, rng)
    return x, float(np.max(np.abs(inst.vectors @ x), initial=0.0))


def lp_discrepancy(matrix, coloring, p: float) -> float:
    """``((1/m) * sum_i |<row_i, x>|^p)^(1/p)``."""
    if not p >= 1:
        raise InputError(f"p must be >= 1, got {p}")
    a = np.asarray(matrix, dtype=float)
    x = np.asarray(coloring, dtype=float)
    if a.ndim != 2 or x.shape != (a.shape[1],):
        raise InputError(f"shape mismatch: matrix {a.shape}, coloring {x.shape}")
    if math.isinf(p):
        raise InputError("p must be finite")
    y = np.abs(a @ x)
    return float(np.mean(y**p) ** (1.0 / p))


@dataclass(frozen=True)
class FactorizedMatrix:
    """``A = B @ C`` with rows of B bounded by ``gamma`` and unit-bounded columns of C."""

    B: np.ndarray
    C: np.ndarray
    gamma: float | None = None

    def __post_init__(self):
        b = as_vector_set(self.B)
        c = as_vector_set(self.C)
        if b.shape[1] != c.shape[0]:
            raise InputError(f"inner dimensions differ: B is {b.shape}, C is {c.shape}")
        if np.any(np.linalg.norm(c, axis=0) > 1.0 + TOL_NORM):
            raise InputError("columns of C must have norm at most 1")
        row_norms = np.linalg.norm(b, axis=1)
        gamma = float(row_norms.max(initial=0.0)) if self.gamma is None else float(self.gamma)
        if np.any(row_norms > gamma * (1.0 + TOL_NORM)):
            raise InputError(f"rows of B exceed gamma = {gamma}")
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "gamma", gamma)

    @property
    def matrix(self) -> np.ndarray:
        return self.B @ self.C


def gamma2_color(fact: FactorizedMatrix, rng=None) -> tuple[np.ndarray, float]:
    """Walk on the columns of C; returns ``(x, ||B C x||_inf)``."""
    x, _ = run_walk(Instance.centered(fact.C), rng)
    return x, float(np.max(np.abs(fact.B @ (fact.C @ x)), initial=0.0))


# --------------------------------------------------------------------------
# Hull systems


@dataclass(frozen=True)
class HullSystem:
    """Sets ``S_i`` given as point arrays ``points[i]`` (``k_i x m``) with
    convex weights ``coeffs[i]`` that sum to one and balance to the origin."""

    points: tuple
    coeffs: tuple

    def __post_init__(self):
        if len(self.points) != len(self.coeffs):
            raise InputError("points and coeffs must have one entry per set")
        if not self.points:
            raise InputError("hull system has no sets")
        pts, cfs = [], []
        m = None
        for i, (p, c) in enumerate(zip(self.points, self.coeffs)):
            p = np.atleast_2d(np.asarray(p, dtype=float))
            c = np.asarray(c, dtype=float)
            if m is None:
                m = p.shape[1]
            if p.shape[1] != m or c.shape != (p.shape[0],):
                raise InputError(f"set {i}: inconsistent shapes {p.shape} / {c.shape}")
            if not (np.all(np.isfinite(p)) and np.all(np.isfinite(c))):
                raise InputError(f"set {i}: non-finite entries")
            if np.any(np.linalg.norm(p, axis=1) > 1.0 + TOL_NORM):
                raise InputError(f"set {i}: points must lie in the unit ball")
            if np.any(c < 0):
                raise InputError(f"set {i}: coefficients must be non-negative")
            if abs(c.sum() - 1.0) > 1e-9:
                raise InputError(f"set {i}: coefficients sum to {c.sum()!r}, not 1")
            if np.linalg.norm(c @ p) > 1e-8:
                raise InputError(f"set {i}: weighted points do not balance to 0")
            p.setflags(write=False)
            c.setflags(write=False)
            pts.append(p)
            cfs.append(c)
        object.__setattr__(self, "points", tuple(pts))
        object.__setattr__(self, "coeffs", tuple(cfs))

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return self.points[0].shape[1]

    @property
    def max_points(self) -> int:
        return max(p.shape[0] for p in self.points)


@dataclass
class HullLevel:
    """One bit level of the rounding.

    ``numerators`` are the integer coefficient numerators over ``2**ell``
    before the level; ``pairs`` lists ``(i, j_first, j_second)``;
    ``walk_coloring`` colors the pair difference vectors; ``level_sum`` is
    ``sum over colored (i, j) of chi(i, j) * v_ij`` (twice the walk output).
    """

    ell: int
    numerators: list[list[int]]
    pairs: list[tuple[int, int, int]]
    walk_coloring: np.ndarray
    walk_output: np.ndarray
    level_sum: np.ndarray
    trace: Trace | None = None


@dataclass
class HullRounding:
    selection: list[int]
    total: np.ndarray
    norm: float
    bits: int
    truncated: list[list[int]]
    truncation_shift: np.ndarray
    levels: list[HullLevel] = field(default_factory=list)


def truncation_bits(sys: HullSystem, epsilon: float) -> int:
    """Bits kept per coefficient: ``ceil(log2(2 n m / epsilon))``.

    When a set has more than ``m + 1`` points the count uses
    ``max_points - 1`` in place of ``m`` so the truncation shift stays
    below ``epsilon``.
    """
    width = max(sys.m, sys.max_points - 1, 1)
    return max(1, math.ceil(math.log2(2 * sys.n * width / epsilon)))


def truncate_coefficients(sys: HullSystem, bits: int) -> list[list[int]]:
    """Numerators over ``2**bits`` that sum to exactly ``2**bits`` per set.

    Each coefficient is truncated down; the per-set deficit goes to the
    largest coefficient (first one on ties).
    """
    scale = 1 << bits
    out = []
    for c in sys.coeffs:
        nums = [math.floor(float(v) * scale) for v in c]
        deficit = scale - sum(nums)
        if deficit < 0:
            raise NumericalError("truncated coefficients exceed one")
        nums[int(np.argmax(c))] += deficit
        out.append(nums)
    return out


def round_hull_system(sys: HullSystem, epsilon: float, rng=None, record_traces: bool = False) -> HullRounding:
    """Pick one point per set so that the sum of the picks is small.

    Coefficients are truncated to dyadic rationals, then cleared one bit at a
    time from the lowest: at level ``ell`` the coefficients whose ``ell``-th
    bit is set are paired within each set, the walk colors the halved pair
    differences, and each pair moves ``+-2**-ell`` in opposite directions.
    """
    if not 0 < epsilon < 0.5:
        raise InputError("epsilon must lie in (0, 1/2)")
    rng = _as_rng(rng)
    bits = truncation_bits(sys, epsilon)
    nums = truncate_coefficients(sys, bits)
    truncated = [list(row) for row in nums]
    shift = np.zeros(sys.m)
    for pts, c, row in zip(sys.points, sys.coeffs, nums):
        shift += (np.array(row, dtype=float) / (1 << bits) - c) @ pts

    levels = []
    for ell in range(bits, 0, -1):
        pairs = []
        for i, row in enumerate(nums):
            odd = [j for j, a in enumerate(row) if a & 1]
            if len(odd) % 2:
                raise NumericalError(f"set {i} has an odd number of set bits at level {ell}")
            pairs.extend((i, odd[q], odd[q + 1]) for q in range(0, len(odd), 2))
        before = [list(row) for row in nums]
        if pairs:
            w = np.column_stack([(sys.points[i][a] - sys.points[i][b]) / 2.0 for i, a, b in pairs])
            chi, trace = run_walk(Instance.centered(w), rng, record_trace=record_traces)
            walk_output = w @ chi
            level_sum = np.zeros(sys.m)
            for (i, a, b), s in zip(pairs, chi):
                s = int(s)
                nums[i][a] += s
                nums[i][b] -= s
                level_sum += s * (sys.points[i][a] - sys.points[i][b])
        else:
            chi, trace = np.zeros(0, dtype=np.int8), None
            walk_output = np.zeros(sys.m)
            level_sum = np.zeros(sys.m)
        nums = [[a >> 1 for a in row] for row in nums]
        levels.append(HullLevel(ell, before, pairs, chi, walk_output, level_sum, trace))

    selection = []
    for i, row in enumerate(nums):
        if sorted(row)[-1] != 1 or sum(row) != 1 or min(row) < 0:
            raise NumericalError(f"set {i} did not round to a single point: {row}")
        selection.append(row.index(1))
    total = np.zeros(sys.m)
    for pts, j in zip(sys.points, selection):
        total += pts[j]
    return HullRounding(
        selection=selection,
        total=total,
        norm=float(np.linalg.norm(total)),
        bits=bits,
        truncated=truncated,
        truncation_shift=shift,
        levels=levels,
    )
