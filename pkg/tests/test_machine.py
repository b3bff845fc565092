import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bsi import (
    Topology,
    TransitionAssignment,
    entropy_rate,
    stationary_distribution,
    statistical_complexity,
    trace_path,
)
from bsi.machine import as_series
from bsi.processes import builtin, generate_series

from conftest import CYCLE, EVEN, FIG_I, GOLDEN_MEAN, IID, WORKED_EXAMPLE


def test_worked_example_edge_counts():
    c = trace_path(FIG_I, 0, WORKED_EXAMPLE)
    assert c.counts[0, 1] == 7   # n(A1|A)
    assert c.counts[1, 0] == 6   # n(B0|A)
    assert c.counts[1, 1] == 7   # n(B1|A)
    assert c.counts[0, 0] == 0   # n(A0|A)
    assert c.visits.tolist() == [7, 13]
    assert c.total == len(WORKED_EXAMPLE)


def test_empty_series_accepted_with_zero_counts():
    for top in (GOLDEN_MEAN, EVEN, IID, CYCLE):
        for s in range(top.n_states):
            c = trace_path(top, s, "")
            assert c is not None and c.total == 0


def test_even_rejects_10_from_A():
    assert trace_path(EVEN, 0, "10") is None
    assert trace_path(EVEN, 1, "10") is not None


def test_bad_symbol_is_a_fault():
    with pytest.raises(ValueError):
        trace_path(GOLDEN_MEAN, 0, [0, 2])
    with pytest.raises(ValueError):
        trace_path(GOLDEN_MEAN, 5, "0")


def test_unifilarity_enforced_by_construction():
    with pytest.raises(ValueError):
        Topology.from_edges(1, 2, [(0, 0, 0), (0, 0, 0)])
    with pytest.raises(ValueError):
        Topology(((1, -1), (-1, -1)))      # state 1 has no out-edge
    with pytest.raises(ValueError):
        Topology(((2, -1), (0, -1)))       # dangling target


def test_stationary_golden_mean():
    theta = TransitionAssignment.from_dict(GOLDEN_MEAN, {(0, 0): 0.5, (0, 1): 0.5})
    pi = stationary_distribution(GOLDEN_MEAN, theta)
    np.testing.assert_allclose(pi, [2 / 3, 1 / 3], atol=1e-14)
    assert entropy_rate(GOLDEN_MEAN, theta, pi) == pytest.approx(2 / 3, abs=1e-12)
    assert statistical_complexity(pi) == pytest.approx(math.log2(3) - 2 / 3, abs=1e-12)


def test_single_state_and_periodic_cycle():
    theta = TransitionAssignment.uniform(IID)
    pi = stationary_distribution(IID, theta)
    assert pi.tolist() == [1.0]
    assert entropy_rate(IID, theta, pi) == pytest.approx(1.0)
    assert statistical_complexity(pi) == 0.0

    theta = TransitionAssignment.uniform(CYCLE)
    pi = stationary_distribution(CYCLE, theta)
    np.testing.assert_allclose(pi, [0.5, 0.5], atol=1e-15)
    assert entropy_rate(CYCLE, theta, pi) == 0.0
    assert statistical_complexity(pi) == pytest.approx(1.0)


def test_statistical_complexity_uniform_four():
    assert statistical_complexity([0.25] * 4) == pytest.approx(2.0)


def test_not_strongly_connected_is_fault():
    top = Topology(((1, -1), (-1, 1)))
    with pytest.raises(ValueError):
        stationary_distribution(top, TransitionAssignment.uniform(top))


def test_assignment_validation():
    with pytest.raises(ValueError):
        TransitionAssignment(GOLDEN_MEAN, [[0.5, 0.4], [0.0, 1.0]])
    with pytest.raises(ValueError):
        TransitionAssignment(GOLDEN_MEAN, [[0.5, 0.5], [0.5, 0.5]])


def test_as_series_parsing():
    assert as_series("1 0\n1", 2).tolist() == [1, 0, 1]
    with pytest.raises(ValueError):
        as_series("10a1", 2)
    with pytest.raises(ValueError):
        as_series("102", 2)


@pytest.mark.parametrize("name", ["golden-mean", "even"])
def test_counts_sum_to_length_on_generated_data(name):
    hmm = builtin(name)
    top = hmm.topology()
    for seed in range(5):
        data = generate_series(hmm, 500, seed)
        accepted = 0
        for s in range(2):
            c = trace_path(top, s, data)
            if c is None:
                continue
            accepted += 1
            assert c.total == 500
            assert np.all(c.counts[top.table == -1] == 0)
            assert c == trace_path(top, s, data)   # deterministic
        assert accepted >= 1


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=30), st.integers(0, 10), st.integers(0, 1))
def test_monotone_rejection(prefix, extra, start):
    data = np.array(prefix + [1, 0] * extra, dtype=np.uint8)
    for top in (GOLDEN_MEAN, EVEN, CYCLE):
        if trace_path(top, start, data[: len(prefix)]) is None:
            assert trace_path(top, start, data) is None


def test_stationarity_residual_on_library(full_library):
    rng = np.random.default_rng(11)
    for top in full_library.machines[::7]:
        mask = top.table != -1
        p = np.where(mask, rng.gamma(1.0, size=mask.shape), 0.0)
        p /= p.sum(axis=1, keepdims=True)
        theta = TransitionAssignment(top, p)
        pi = stationary_distribution(top, theta)
        T = theta.state_matrix()
        assert abs(pi.sum() - 1) < 1e-12
        assert np.abs(pi @ T - pi).max() <= 1e-10


def test_information_bounds_random_pairs(full_library):
    rng = np.random.default_rng(5)
    machines = full_library.machines
    idx = rng.integers(0, len(machines), size=100_000)
    for i in idx:
        top = machines[i]
        mask = top.table != -1
        p = np.where(mask, rng.random(mask.shape) + 1e-3, 0.0)
        p /= p.sum(axis=1, keepdims=True)
        theta = TransitionAssignment(top, p)
        pi = stationary_distribution(top, theta)
        h = entropy_rate(top, theta, pi)
        c = statistical_complexity(pi)
        assert -1e-12 <= h <= 1.0 + 1e-12
        assert -1e-12 <= c <= math.log2(top.n_states) + 1e-12
