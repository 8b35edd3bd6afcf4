import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _branches import ScriptedRng, enumerate_branches
from gswalk.errors import InputError
from gswalk.linalg import TOL_ORTH, TOL_RESID
from gswalk.generators import gen_duplicated, gen_komlos
from gswalk.walk import (
    TOL_FROZEN,
    Instance,
    WalkState,
    choose_delta,
    compute_update_direction,
    phase_decomposition,
    run_walk,
    sample_colorings,
    signed_discrepancy_trace,
    step_sizes,
    walk_rng,
    walk_step,
)

R2 = 1 / math.sqrt(2)


def komlos_pair():
    return Instance.centered(np.array([[1.0, R2], [0.0, R2]]))


# ---------------------------------------------------------------- Instance


def test_instance_rejects_long_vector():
    with pytest.raises(InputError):
        Instance.centered(np.array([[1.1], [0.0]]))


def test_instance_rejects_x0_out_of_cube():
    with pytest.raises(InputError):
        Instance(np.eye(2), [0.0, 1.5])


def test_instance_snaps_nearly_frozen():
    inst = Instance(np.eye(2), [1 - TOL_FROZEN / 2, -0.5])
    assert inst.x0[0] == 1.0
    state = WalkState.initial(inst)
    assert list(state.alive) == [1]
    assert state.pivot == 1


def test_instance_is_read_only():
    inst = Instance.centered(np.eye(2))
    with pytest.raises(ValueError):
        inst.vectors[0, 0] = 2.0


# ---------------------------------------------------------------- direction


def test_direction_single_alive():
    inst = Instance(np.eye(3), [0.0, 1.0, -1.0])
    u, v = compute_update_direction(WalkState.initial(inst), inst)
    np.testing.assert_array_equal(u, [1, 0, 0])
    np.testing.assert_allclose(v, [1, 0, 0])


def test_direction_orthonormal():
    inst = Instance.centered(np.eye(4))
    u, v = compute_update_direction(WalkState.initial(inst), inst)
    np.testing.assert_allclose(u, [0, 0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(v, [0, 0, 0, 1], atol=1e-15)


def test_direction_hand_gram_schmidt():
    inst = komlos_pair()
    u, v = compute_update_direction(WalkState.initial(inst), inst)
    np.testing.assert_allclose(u, [-R2, 1.0], atol=1e-12)
    np.testing.assert_allclose(v, [0.0, R2], atol=1e-12)
    np.testing.assert_allclose(inst.vectors @ u, v, atol=TOL_RESID)
    assert abs(v @ inst.vectors[:, 0]) <= TOL_ORTH


def test_direction_pivot_in_span_gives_zero_vperp():
    inst = Instance.centered(np.array([[1.0, 1.0]]))
    u, v = compute_update_direction(WalkState.initial(inst), inst)
    np.testing.assert_allclose(u, [-1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(v, [0.0], atol=1e-12)


# ---------------------------------------------------------------- step sizes


def test_step_sizes_symmetric():
    assert step_sizes([0.0], [1.0], [0]) == (-1.0, 1.0)


def test_step_sizes_offset_pivot():
    assert step_sizes([0.5], [1.0], [0]) == pytest.approx((-1.5, 0.5))


def test_step_sizes_interval_intersection():
    dm, dp = step_sizes([0.5, 0.0], [-R2, 1.0], [0, 1])
    assert dp == pytest.approx(1.0)
    assert dm == pytest.approx(-R2)


def test_step_sizes_ignore_frozen():
    dm, dp = step_sizes([1.0, 0.0], [1.0, 1.0], [1])
    assert (dm, dp) == (-1.0, 1.0)


def _oracle_interval(x, u, alive):
    lo, hi = -np.inf, np.inf
    for i in alive:
        if abs(u[i]) < 1e-300:
            continue
        a, b = sorted(((-1 - x[i]) / u[i], (1 - x[i]) / u[i]))
        lo, hi = max(lo, a), min(hi, b)
    return lo, hi


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_step_sizes_match_interval_oracle(data):
    n = data.draw(st.integers(1, 6))
    x = np.array(data.draw(st.lists(st.floats(-0.99, 0.99), min_size=n, max_size=n)))
    u = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n)))
    u[-1] = 1.0
    alive = list(range(n))
    dm, dp = step_sizes(x, u, alive)
    assert (dm, dp) == pytest.approx(_oracle_interval(x, u, alive), rel=1e-12)
    assert dm < 0 < dp
    for d in (dm, dp):
        assert np.max(np.abs(x + d * u)) == pytest.approx(1.0, abs=1e-12)
    for frac in (0.01, 0.5, 0.99):
        assert np.max(np.abs(x + frac * dp * u)) < 1
        assert np.max(np.abs(x + frac * dm * u)) < 1


# ---------------------------------------------------------------- choose_delta


@pytest.mark.parametrize("dm, dp, p_minus", [(-1.0, 1.0, 0.5), (-1.5, 0.5, 0.25), (-0.2, 0.8, 0.8)])
def test_choose_delta_probabilities(dm, dp, p_minus):
    assert p_minus == pytest.approx(dp / (dp - dm))
    assert p_minus * dm + (1 - p_minus) * dp == pytest.approx(0.0, abs=1e-15)
    n = 200_000
    draws = np.random.default_rng(1).random(n)
    picks = np.array([choose_delta(dm, dp, _Fixed(u)) for u in draws[:20_000]])
    assert set(np.unique(picks)) <= {dm, dp}
    freq = np.mean(draws < p_minus)
    assert abs(freq - p_minus) < 5 * math.sqrt(p_minus * (1 - p_minus) / n)
    assert abs(np.mean(picks == dm) - p_minus) < 5 * math.sqrt(p_minus * (1 - p_minus) / 20_000)


class _Fixed:
    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u


def test_choose_delta_scripted_extremes():
    assert choose_delta(-1.5, 0.5, ScriptedRng([0])) == -1.5
    assert choose_delta(-1.5, 0.5, ScriptedRng([1])) == 0.5


# ---------------------------------------------------------------- walk_step / run_walk


def test_single_coordinate_step():
    inst = Instance.centered(np.array([[0.6], [0.8]]))
    state, rec = walk_step(WalkState.initial(inst), inst, 4)
    assert state.done
    assert abs(state.x[0]) == 1.0
    assert rec.frozen_after == (0,)
    assert rec.prob_plus == 0.5


def test_orthonormal_steps_color_pivot_only():
    inst = Instance.centered(np.eye(5))
    _, trace = run_walk(inst, 3, record_trace=True)
    assert len(trace) == 5
    for k, rec in enumerate(trace.steps):
        assert rec.pivot == 4 - k
        assert rec.frozen_after == (rec.pivot,)
        assert (rec.delta_minus, rec.delta_plus) == (-1.0, 1.0)


def test_run_walk_n1_uniform():
    inst = Instance.centered(np.array([[1.0]]))
    branches = enumerate_branches(lambda r: _run(inst, r))
    assert sorted((p, tuple(x)) for p, x in branches) == [(0.5, (-1,)), (0.5, (1,))]


def _run(inst, rng):
    x, trace = run_walk(inst, rng, record_trace=True)
    return x, trace.steps


def test_run_walk_already_colored():
    inst = Instance(np.eye(3), [1.0, -1.0, 1.0])
    x, trace = run_walk(inst, 0, record_trace=True)
    np.testing.assert_array_equal(x, [1, -1, 1])
    assert len(trace) == 0


def test_komlos_pair_exact_law():
    inst = komlos_pair()
    law = {}
    for p, x in enumerate_branches(lambda r: _run(inst, r)):
        law[tuple(int(v) for v in x)] = law.get(tuple(int(v) for v in x), 0.0) + p
    hi, lo = (1 + R2) / 4, (1 - R2) / 4
    expected = {(-1, 1): hi, (1, -1): hi, (1, 1): lo, (-1, -1): lo}
    assert law.keys() == expected.keys()
    for k in expected:
        assert law[k] == pytest.approx(expected[k], abs=1e-12)
    # the mean of x is x0 = 0
    mean = sum(p * np.array(x) for x, p in law.items())
    np.testing.assert_allclose(mean, 0, atol=1e-12)


def test_komlos_pair_first_step_by_hand():
    inst = komlos_pair()
    _, trace = run_walk(inst, ScriptedRng([1, 0]), record_trace=True)
    first = trace.steps[0]
    assert (first.delta_minus, first.delta_plus) == pytest.approx((-1.0, 1.0))
    np.testing.assert_allclose(first.x_after, [-R2, 1.0], atol=1e-12)
    assert first.frozen_after == (1,)


def test_duplicated_pair_freezes_both():
    inst = Instance.centered(np.array([[1.0, 1.0]]))
    for choice in (0, 1):
        x, trace = run_walk(inst, ScriptedRng([choice]), record_trace=True)
        assert len(trace) == 1
        rec = trace.steps[0]
        np.testing.assert_allclose(rec.u, [-1, 1], atol=1e-12)
        assert rec.frozen_after == (0, 1)
        assert x[0] == -x[1]
        assert phase_decomposition(trace) == [(1, 1, 1)]


def test_preserves_prefrozen():
    rng = np.random.default_rng(5)
    v = gen_komlos(10, 6, 5)
    x0 = rng.uniform(-1, 1, 10)
    x0[[1, 4, 7]] = [1.0, -1.0, 1.0]
    x, _ = run_walk(Instance(v, x0), 9)
    assert (x[1], x[4], x[7]) == (1, -1, 1)


def test_invalid_instance():
    with pytest.raises(InputError):
        run_walk(np.eye(2))


def test_seeded_reproducible():
    inst = Instance.centered(gen_komlos(20, 10, 1))
    a, _ = run_walk(inst, walk_rng(3, 7))
    b, _ = run_walk(inst, walk_rng(3, 7))
    np.testing.assert_array_equal(a, b)


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(1, 10),
    m=st.integers(1, 10),
    seed=st.integers(0, 2**32 - 1),
    dup=st.booleans(),
)
def test_trace_invariants(n, m, seed, dup):
    rng = np.random.default_rng(seed)
    vectors = gen_duplicated(n, m, 2, seed) if dup else gen_komlos(n, m, seed)
    vectors = vectors * rng.uniform(0.3, 1.0, n)
    x0 = rng.uniform(-1, 1, n)
    x0[rng.random(n) < 0.2] = rng.choice([-1.0, 1.0])
    inst = Instance(vectors, x0)
    x, trace = run_walk(inst, rng, record_trace=True)
    assert set(np.unique(x)) <= {-1, 1}
    assert len(trace) <= n
    frozen0 = np.abs(inst.x0) == 1
    np.testing.assert_array_equal(x[frozen0], inst.x0[frozen0])
    prev_alive = None
    for rec in trace.steps:
        assert rec.pivot == max(rec.alive)
        assert rec.u[rec.pivot] == 1.0
        off = np.setdiff1d(np.arange(n), rec.alive)
        assert np.all(rec.u[off] == 0)
        assert rec.delta_minus < 0 < rec.delta_plus
        assert 0 < rec.prob_plus < 1
        assert rec.frozen_after
        assert np.max(np.abs(rec.x_after)) <= 1.0
        np.testing.assert_allclose(inst.vectors @ rec.u, rec.v_perp, atol=TOL_RESID)
        others = [i for i in rec.alive if i != rec.pivot]
        assert np.all(np.abs(inst.vectors[:, others].T @ rec.v_perp) <= TOL_ORTH)
        if prev_alive is not None:
            assert set(rec.alive) < set(prev_alive)
        prev_alive = rec.alive

    phases = phase_decomposition(trace)
    covered = [t for ph in phases for t in range(ph.t_begin, ph.t_end + 1)]
    assert covered == list(range(1, len(trace) + 1))
    for ph in phases:
        assert all(trace.steps[t - 1].pivot == ph.pivot for t in range(ph.t_begin, ph.t_end + 1))
        assert ph.pivot in trace.steps[ph.t_end - 1].frozen_after

    theta = rng.standard_normal(m)
    disc = signed_discrepancy_trace(trace, inst, theta)
    assert disc[0] == 0
    for t, rec in enumerate(trace.steps, start=1):
        assert disc[t] - disc[t - 1] == pytest.approx(
            rec.delta_chosen * (theta @ rec.v_perp), abs=TOL_RESID * np.linalg.norm(theta) * n
        )
    assert disc[-1] == pytest.approx(theta @ inst.vectors @ (x - inst.x0), abs=1e-6)


def test_discrepancy_trace_examples():
    inst = Instance.centered(np.array([[1.0]]))
    _, trace = run_walk(inst, 0, record_trace=True)
    np.testing.assert_array_equal(signed_discrepancy_trace(trace, inst, [0.0]), [0, 0])
    assert abs(signed_discrepancy_trace(trace, inst, [1.0])[1]) == 1.0
    with pytest.raises(InputError):
        signed_discrepancy_trace(trace, inst, [1.0, 0.0])


def test_orthonormal_phases():
    _, trace = run_walk(Instance.centered(np.eye(6)), 2, record_trace=True)
    phases = phase_decomposition(trace)
    assert len(phases) == 6
    assert all(ph.t_begin == ph.t_end for ph in phases)


def test_single_step_phase():
    _, trace = run_walk(Instance(np.eye(3), [1.0, 0.2, -1.0]), 0, record_trace=True)
    assert phase_decomposition(trace) == [(1, 1, 1)]


# ---------------------------------------------------------------- batched sampler


@pytest.mark.parametrize("shape", [(6, 6), (4, 9), (9, 4)])
def test_batched_matches_sequential(shape):
    m, n = shape
    rng = np.random.default_rng(11)
    x0 = rng.uniform(-1, 1, n)
    x0[0] = 1.0
    inst = Instance(gen_komlos(n, m, 11), x0)
    xs = sample_colorings(inst, 300, seed=5)
    for i in range(300):
        x, _ = run_walk(inst, walk_rng(5, i))
        np.testing.assert_array_equal(xs[i], x)


def test_batched_handles_dependent_vectors():
    inst = Instance.centered(gen_duplicated(8, 3, 2, 0))
    xs = sample_colorings(inst, 200, seed=1)
    for i in range(200):
        np.testing.assert_array_equal(xs[i], run_walk(inst, walk_rng(1, i))[0])


def test_batched_start_offset():
    inst = Instance.centered(gen_komlos(5, 5, 2))
    full = sample_colorings(inst, 50, seed=3)
    np.testing.assert_array_equal(sample_colorings(inst, 20, seed=3, start=30), full[30:])


def test_orthonormal_law_small():
    inst = Instance.centered(np.eye(3))
    xs = sample_colorings(inst, 8000, seed=0)
    counts = {k: 0 for k in itertools.product([-1, 1], repeat=3)}
    for row in xs:
        counts[tuple(int(v) for v in row)] += 1
    assert all(abs(c - 1000) < 5 * math.sqrt(1000) for c in counts.values())
