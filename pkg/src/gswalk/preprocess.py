"""Optional dependency elimination before the walk.

While the alive vectors are linearly dependent, move ``x`` along a kernel
direction ``z`` (so ``V z = 0`` and the discrepancy vector does not change)
until some coordinate freezes.  Step sizes use the same two-point
randomization as the walk, which keeps ``E[x0'] = x0``.
"""

from __future__ import annotations

import numpy as np

from .linalg import null_space_vector
from .walk import Instance, StepRecord, _alive, _as_rng, _move


def eliminate_dependencies(inst: Instance, rng=None) -> tuple[Instance, list[StepRecord]]:
    rng = _as_rng(rng)
    vectors = inst.vectors
    x = np.array(inst.x0, dtype=float)
    records: list[StepRecord] = []
    alive = _alive(x)
    while alive.size:
        z = null_space_vector(vectors, alive)
        if z is None:
            break
        mask = np.zeros(inst.n, dtype=bool)
        mask[alive] = True
        x_new, d_minus, d_plus, delta = _move(x, z, mask, rng)
        alive_new = _alive(x_new)
        records.append(
            StepRecord(
                t=len(records) + 1,
                pivot=int(np.argmax(z)),
                alive=tuple(int(i) for i in alive),
                u=z,
                v_perp=vectors @ z,
                delta_minus=d_minus,
                delta_plus=d_plus,
                delta_chosen=delta,
                prob_plus=-d_minus / (d_plus - d_minus),
                frozen_after=tuple(int(i) for i in np.setdiff1d(alive, alive_new)),
                x_after=x_new.copy(),
            )
        )
        x, alive = x_new, alive_new
    return Instance(vectors, x), records
