"""The Gram-Schmidt walk.

Starting from a fractional coloring ``x0`` in ``[-1, 1]^n`` the walk moves
along the direction ``u`` whose image ``sum_i u(i) v_i`` is the component of
the pivot vector orthogonal to the other alive vectors, choosing one of the
two boundary step sizes at random so that each step has mean zero.  Every
step freezes at least one more coordinate at +-1.

Times are 1-indexed to match the usual write-up: step ``t`` moves
``x_{t-1}`` to ``x_t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InputError
from .linalg import RANK_TOL, TOL_NORM, as_vector_set, split_against_span

TOL_FROZEN = 1e-9

# Condition bound under which the batched sampler uses normal equations.
_BATCH_MAX_COND = 1e5
# Above this many coordinates per-walk factorizations beat the batched solves.
_BATCH_MAX_N = 96


@dataclass(frozen=True)
class Instance:
    """Input vectors (columns of an ``m x n`` array) and a starting coloring."""

    vectors: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        vectors = as_vector_set(self.vectors).copy()
        x0 = np.asarray(self.x0, dtype=float).copy()
        if x0.shape != (vectors.shape[1],):
            raise InputError(f"x0 has shape {x0.shape}, expected ({vectors.shape[1]},)")
        if not np.all(np.isfinite(x0)):
            raise InputError("x0 has non-finite entries")
        norms = np.linalg.norm(vectors, axis=0)
        if np.any(norms > 1.0 + TOL_NORM):
            bad = int(np.argmax(norms))
            raise InputError(f"vector {bad} has norm {norms[bad]:.12g} > 1")
        if np.any(np.abs(x0) > 1.0 + TOL_FROZEN):
            raise InputError("x0 must lie in [-1, 1]^n")
        x0 = _snap(np.clip(x0, -1.0, 1.0))
        vectors.setflags(write=False)
        x0.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "x0", x0)

    @classmethod
    def centered(cls, vectors) -> Instance:
        vectors = as_vector_set(vectors)
        return cls(vectors, np.zeros(vectors.shape[1]))

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[1]


def _snap(x: np.ndarray) -> np.ndarray:
    """Set coordinates within TOL_FROZEN of +-1 exactly to +-1 (in place)."""
    near = np.abs(x) >= 1.0 - TOL_FROZEN
    x[near] = np.copysign(1.0, x[near])
    return x


def _alive(x: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.abs(x) < 1.0)


@dataclass
class WalkState:
    """Current coloring ``x = x_{t-1}`` and alive set at the start of step ``t``."""

    t: int
    x: np.ndarray
    alive: np.ndarray

    @classmethod
    def initial(cls, inst: Instance) -> WalkState:
        x = np.array(inst.x0, dtype=float)
        return cls(t=1, x=x, alive=_alive(x))

    @property
    def pivot(self) -> int | None:
        return int(self.alive[-1]) if self.alive.size else None

    @property
    def done(self) -> bool:
        return self.alive.size == 0


@dataclass
class StepRecord:
    t: int
    pivot: int
    alive: tuple[int, ...]
    u: np.ndarray
    v_perp: np.ndarray
    delta_minus: float
    delta_plus: float
    delta_chosen: float
    prob_plus: float
    frozen_after: tuple[int, ...]
    x_after: np.ndarray

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "pivot": self.pivot,
            "alive": list(self.alive),
            "u": self.u.tolist(),
            "v_perp": self.v_perp.tolist(),
            "delta_minus": self.delta_minus,
            "delta_plus": self.delta_plus,
            "delta_chosen": self.delta_chosen,
            "prob_plus": self.prob_plus,
            "frozen_after": list(self.frozen_after),
            "x_after": self.x_after.tolist(),
        }


@dataclass
class Trace:
    x0: np.ndarray
    coloring: np.ndarray
    steps: list[StepRecord] = field(default_factory=list)
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.steps)

    def colorings(self) -> list[np.ndarray]:
        """``[x_0, x_1, ..., x_T]``."""
        return [np.asarray(self.x0, dtype=float)] + [s.x_after for s in self.steps]


class Phase(NamedTuple):
    t_begin: int
    t_end: int
    pivot: int


def _as_rng(rng):
    """Pass through anything with ``.random()``; seed-like values become a Generator."""
    if rng is None or isinstance(rng, (int, np.integer, np.random.SeedSequence)):
        return np.random.default_rng(rng)
    return rng


def walk_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream number ``index`` derived from a master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, index)))


def compute_update_direction(state: WalkState, inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Update direction ``u`` and the Gram-Schmidt vector ``v_perp = V u``."""
    if state.done:
        raise InputError("no alive coordinates")
    pivot = int(state.alive[-1])
    others = state.alive[:-1]
    coeffs, v_perp = split_against_span(inst.vectors[:, pivot], inst.vectors[:, others])
    u = np.zeros(inst.n)
    u[others] = -coeffs
    u[pivot] = 1.0
    return u, v_perp


def _interval_bounds(x, u, mask):
    """Endpoints of ``{d : |x(i) + d u(i)| <= 1 for every masked i}``.

    Works row-wise on ``(..., n)`` arrays and also returns the coordinates
    attaining each endpoint.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        up = np.where(u > 0, (1.0 - x) / u, (-1.0 - x) / u)
        lo = np.where(u > 0, (-1.0 - x) / u, (1.0 - x) / u)
    active = mask & (u != 0)
    up = np.where(active, up, np.inf)
    lo = np.where(active, lo, -np.inf)
    i_plus = np.argmin(up, axis=-1)
    i_minus = np.argmax(lo, axis=-1)
    d_plus = np.take_along_axis(up, i_plus[..., None], axis=-1)[..., 0]
    d_minus = np.take_along_axis(lo, i_minus[..., None], axis=-1)[..., 0]
    return d_minus, d_plus, i_minus, i_plus


def step_sizes(x, u, alive) -> tuple[float, float]:
    """The negative and positive step sizes at which some alive coordinate hits +-1."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    mask = np.zeros(x.shape[0], dtype=bool)
    mask[np.asarray(alive, dtype=int)] = True
    d_minus, d_plus, _, _ = _interval_bounds(x, u, mask)
    return float(d_minus), float(d_plus)


def choose_delta(delta_minus: float, delta_plus: float, rng) -> float:
    """Pick ``delta_minus`` w.p. ``delta_plus / (delta_plus - delta_minus)``, else ``delta_plus``.

    Consumes exactly one uniform draw, so the result has mean zero.
    """
    p_minus = delta_plus / (delta_plus - delta_minus)
    return delta_minus if rng.random() < p_minus else delta_plus


def _move(x, u, alive_mask, rng):
    """Shared step kernel: bounds, random choice, update and snapping."""
    d_minus, d_plus, i_minus, i_plus = _interval_bounds(x, u, alive_mask)
    d_minus, d_plus = float(d_minus), float(d_plus)
    if not (d_minus < 0.0 < d_plus) or not np.isfinite(d_minus) or not np.isfinite(d_plus):
        raise InputError("degenerate step: alive coordinates must satisfy |x| < 1")
    delta = choose_delta(d_minus, d_plus, rng)
    hit = int(i_minus) if delta == d_minus else int(i_plus)
    x_new = x + delta * u
    x_new[hit] = np.copysign(1.0, x_new[hit])
    np.clip(x_new, -1.0, 1.0, out=x_new)
    _snap(x_new)
    return x_new, d_minus, d_plus, delta


def walk_step(state: WalkState, inst: Instance, rng) -> tuple[WalkState, StepRecord]:
    rng = _as_rng(rng)
    u, v_perp = compute_update_direction(state, inst)
    mask = np.zeros(inst.n, dtype=bool)
    mask[state.alive] = True
    x_new, d_minus, d_plus, delta = _move(state.x, u, mask, rng)
    alive_new = _alive(x_new)
    frozen = tuple(int(i) for i in np.setdiff1d(state.alive, alive_new))
    record = StepRecord(
        t=state.t,
        pivot=int(state.alive[-1]),
        alive=tuple(int(i) for i in state.alive),
        u=u,
        v_perp=v_perp,
        delta_minus=d_minus,
        delta_plus=d_plus,
        delta_chosen=delta,
        prob_plus=-d_minus / (d_plus - d_minus),
        frozen_after=frozen,
        x_after=x_new.copy(),
    )
    return WalkState(t=state.t + 1, x=x_new, alive=alive_new), record


def run_walk(inst: Instance, rng=None, record_trace: bool = False) -> tuple[np.ndarray, Trace | None]:
    """Round ``inst.x0`` to a full coloring in ``{-1, 1}^n``.

    ``rng`` may be a seed, a ``numpy`` Generator, or any object with a
    ``random()`` method; one uniform is drawn per step.
    """
    if not isinstance(inst, Instance):
        raise InputError("run_walk expects an Instance")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    rng = _as_rng(rng)
    state = WalkState.initial(inst)
    steps = []
    while not state.done:
        state, record = walk_step(state, inst, rng)
        if record_trace:
            steps.append(record)
    coloring = state.x.astype(np.int8)
    if not record_trace:
        return coloring, None
    return coloring, Trace(x0=np.array(inst.x0), coloring=coloring, steps=steps, seed=seed)


def signed_discrepancy_trace(trace: Trace, inst: Instance, theta) -> np.ndarray:
    """``disc_t = <theta, V (x_t - x_0)>`` for ``t = 0..T`` (so entry 0 is 0)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (inst.m,):
        raise InputError(f"theta has shape {theta.shape}, expected ({inst.m},)")
    weights = inst.vectors.T @ theta
    x0 = np.asarray(trace.x0, dtype=float)
    return np.array([(x - x0) @ weights for x in trace.colorings()])


def phase_decomposition(trace: Trace) -> list[Phase]:
    """Maximal runs of steps sharing a pivot, as 1-indexed inclusive time ranges."""
    phases: list[Phase] = []
    for rec in trace.steps:
        if phases and phases[-1].pivot == rec.pivot:
            phases[-1] = phases[-1]._replace(t_end=rec.t)
        else:
            phases.append(Phase(rec.t, rec.t, rec.pivot))
    return phases


# --------------------------------------------------------------------------
# Batched sampling: many independent walks on one instance at once.


def _batched_coefficients(vectors, gram, others, pivot, fast):
    """Min-norm ``c`` with ``V (others * c) = projection of v_pivot``, row-wise.

    With ``fast`` set the caller has certified that every row's columns are
    well-conditioned, so the unique solution comes from the Gram system plus
    one refinement step against ``V`` (corrected semi-normal equations).
    Otherwise a pseudo-inverse with the ``RANK_TOL`` cutoff is used.
    """
    n = others.shape[1]
    o = others.astype(float)
    vp = vectors[:, pivot].T
    if not fast:
        masked = vectors[None, :, :] * o[:, None, :]
        pinv = np.linalg.pinv(masked, rcond=RANK_TOL)
        return np.einsum("rij,rj->ri", pinv, vp)
    g = gram[None, :, :] * o[:, :, None] * o[:, None, :]
    g[:, np.arange(n), np.arange(n)] += 1.0 - o
    rhs = gram[:, pivot].T * o
    c = np.linalg.solve(g, rhs[..., None])[..., 0]
    resid = vp - (c * o) @ vectors.T
    c += np.linalg.solve(g, ((resid @ vectors) * o)[..., None])[..., 0]
    return c * o


def _certified_fast(vectors, alive) -> bool:
    """True when the initial non-pivot alive columns have condition <= _BATCH_MAX_COND.

    The non-pivot alive set only shrinks along a walk, and dropping columns
    cannot worsen the condition number, so one check covers every later step.
    """
    others = alive[:-1]
    if others.size == 0:
        return True
    s = np.linalg.svd(vectors[:, others], compute_uv=False)
    if others.size > s.size or s[-1] <= 0.0:
        return False
    return s[0] / s[-1] <= _BATCH_MAX_COND


def _batched_walk(inst: Instance, uniforms: np.ndarray) -> np.ndarray:
    vectors = inst.vectors
    n = inst.n
    batch = uniforms.shape[0]
    gram = vectors.T @ vectors
    x = np.tile(inst.x0, (batch, 1))
    alive = np.abs(x) < 1.0
    step = np.zeros(batch, dtype=int)
    fast = _certified_fast(vectors, _alive(np.array(inst.x0)))

    while True:
        rows = np.flatnonzero(alive.any(axis=1))
        if rows.size == 0:
            break
        xa = x[rows]
        aa = alive[rows]
        r = np.arange(rows.size)
        pivot = n - 1 - np.argmax(aa[:, ::-1], axis=1)
        others = aa.copy()
        others[r, pivot] = False
        u = -_batched_coefficients(vectors, gram, others, pivot, fast)
        u[r, pivot] = 1.0

        d_minus, d_plus, i_minus, i_plus = _interval_bounds(xa, u, aa)
        draws = uniforms[rows, step[rows]]
        take_minus = draws < d_plus / (d_plus - d_minus)
        delta = np.where(take_minus, d_minus, d_plus)
        hit = np.where(take_minus, i_minus, i_plus)
        xn = xa + delta[:, None] * u
        xn[r, hit] = np.copysign(1.0, xn[r, hit])
        np.clip(xn, -1.0, 1.0, out=xn)
        _snap(xn)
        x[rows] = xn
        alive[rows] = np.abs(xn) < 1.0
        step[rows] += 1
    return x.astype(np.int8)


def sample_colorings(
    inst: Instance, n_samples: int, seed: int, start: int = 0, chunk: int = 4096
) -> np.ndarray:
    """Colorings of walks ``start .. start + n_samples - 1`` as an int8 array.

    Walk ``i`` uses the stream ``walk_rng(seed, i)`` and matches
    ``run_walk(inst, walk_rng(seed, i))`` up to floating-point roundoff.
    """
    out = np.empty((n_samples, inst.n), dtype=np.int8)
    if inst.n > _BATCH_MAX_N:
        for i in range(n_samples):
            out[i] = run_walk(inst, walk_rng(seed, start + i))[0]
        return out
    draws = max(inst.n, 1)
    for a in range(0, n_samples, chunk):
        b = min(a + chunk, n_samples)
        uniforms = np.stack([walk_rng(seed, start + i).random(draws) for i in range(a, b)])
        out[a:b] = _batched_walk(inst, uniforms)
    return out
