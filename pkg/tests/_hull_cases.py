"""Small hull systems with exact dyadic coefficients, shared by tests."""

import numpy as np

from gswalk.applications import HullSystem


def _unit(a):
    return np.array([np.cos(a), np.sin(a)])


def three_point_set(a, b):
    """Points p, q and -(p+q)/2 with weights (1/4, 1/4, 1/2)."""
    p, q = _unit(a), _unit(b)
    return np.array([p, q, -(p + q) / 2]), np.array([0.25, 0.25, 0.5])


def two_bit_systems():
    sets = [three_point_set(0.3, 1.9), three_point_set(-2.0, 0.7), three_point_set(2.5, 2.9)]
    quarter = (np.array([_unit(0.4), _unit(0.4 + np.pi)]), np.array([0.5, 0.5]))
    skew = (
        np.array([_unit(1.0), -_unit(1.0) / 3]),
        np.array([0.25, 0.75]),
    )
    return [
        HullSystem([sets[0][0]], [sets[0][1]]),
        HullSystem([sets[0][0], sets[1][0]], [sets[0][1], sets[1][1]]),
        HullSystem([sets[2][0], quarter[0]], [sets[2][1], quarter[1]]),
        HullSystem([skew[0], sets[1][0]], [skew[1], sets[1][1]]),
    ]


def hull_run(system, epsilon):
    from gswalk.applications import round_hull_system

    def run(rng):
        res = round_hull_system(system, epsilon, rng, record_traces=True)
        steps = [s for lvl in res.levels if lvl.trace is not None for s in lvl.trace.steps]
        return res, steps

    return run
