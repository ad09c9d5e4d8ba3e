import math
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from hypothesis import given, settings

from ..chain_core import (
    tv_distance, check_ergodic, stationary_distribution, step_law, emit_law, stationary_observation_law,
    sample_trajectory, trajectory_sampler, joint_law_tensor, exact_joint_law, enumeration_guard,
)
from .. import rng
from ..structs.chain import StochasticVector, StochasticMatrix, ChainSpec
from ..structs.exceptions import DimensionError, NotErgodicError, EnumerationLimitError
from .conftest import TWO_STATE_PI, iid_spec, positive_kernels, stochastic_vectors


def test_tv_distance():
    assert tv_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0
    assert tv_distance(StochasticVector([0.5, 0.5]), StochasticVector(TWO_STATE_PI)) == pytest.approx(1 / 6)

    with pytest.raises(DimensionError):
        tv_distance(np.array([0.5, 0.5]), np.array([0.2, 0.3, 0.5]))


@given(stochastic_vectors(size=4, min_entry=0.0), stochastic_vectors(size=4, min_entry=0.0))
def test_tv_distance_is_a_metric_on_the_simplex(p, q):
    distance = tv_distance(p, q)
    assert 0.0 <= distance <= 1.0 + 1e-15
    assert distance == pytest.approx(tv_distance(q, p))
    assert tv_distance(p, p) == 0.0


@pytest.mark.parametrize('size, concentration', [(2, 1.0), (5, 1.0), (5, 0.2)])
def test_tv_distance_triangle_inequality(size, concentration):
    triples = np.random.default_rng(size).dirichlet(np.full(size, concentration), size=(10 ** 4, 3))
    for p, q, r in triples:
        assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12


def test_stochastic_vector_validation():
    with pytest.raises(ValueError, match='sum to'):
        StochasticVector([0.5, 0.6])
    with pytest.raises(ValueError, match='negative'):
        StochasticVector([1.2, -0.2])

    # within the tolerance the vector is renormalized
    assert StochasticVector([0.5, 0.5 + 1e-10]).probs.sum() == pytest.approx(1.0, abs=1e-15)


def test_stochastic_matrix_layout(two_state_kernel):
    assert_array_equal(two_state_kernel.column(0), [0.9, 0.1])
    assert two_state_kernel.rows() == [[0.9, 0.1], [0.2, 0.8]]

    with pytest.raises(ValueError, match='column 1 sums to'):
        StochasticMatrix.from_rows([[0.9, 0.1], [0.2, 0.7]])


def test_chain_spec_checks_sizes(two_state_kernel):
    with pytest.raises(ValueError, match='`initial` has 3 entries'):
        ChainSpec(state_count=2, initial=StochasticVector.uniform(3), transition=two_state_kernel)


def test_check_ergodic(two_state_kernel):
    assert check_ergodic(two_state_kernel)
    assert check_ergodic(StochasticMatrix.rank_one([0.5, 0.3, 0.2], 3))
    assert not check_ergodic(StochasticMatrix.identity(3))
    # 周期为 2
    assert not check_ergodic(StochasticMatrix([[0.0, 1.0], [1.0, 0.0]]))

    with pytest.raises(DimensionError):
        check_ergodic(np.ones((2, 3)) / 2)


def test_stationary_distribution(two_state_kernel):
    assert_allclose(stationary_distribution(two_state_kernel).probs, TWO_STATE_PI, atol=1e-12)

    with pytest.raises(NotErgodicError):
        stationary_distribution(StochasticMatrix.identity(2))


@given(positive_kernels())
def test_stationary_distribution_is_fixed(kernel):
    pi = stationary_distribution(kernel).probs
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert_allclose(kernel.entries @ pi, pi, atol=1e-12)


def test_step_law(two_state_kernel):
    start = StochasticVector.point_mass(2, 0)
    assert_array_equal(step_law(two_state_kernel, start, 1).probs, [1.0, 0.0])
    assert_allclose(step_law(two_state_kernel, start, 2).probs, [0.9, 0.1])
    assert_allclose(step_law(two_state_kernel, start, 3).probs, [0.83, 0.17])

    with pytest.raises(ValueError):
        step_law(two_state_kernel, start, 0)
    with pytest.raises(DimensionError):
        step_law(two_state_kernel, StochasticVector.uniform(3), 2)


def test_emit_law(two_state_hidden_spec):
    emission = two_state_hidden_spec.emission
    assert_allclose(emit_law(emission, StochasticVector(TWO_STATE_PI)).probs, [0.5, 0.5])
    assert_allclose(stationary_observation_law(two_state_hidden_spec).probs, [0.5, 0.5])


def test_sample_trajectory_is_reproducible(two_state_hidden_spec):
    first = sample_trajectory(two_state_hidden_spec, 200, seed=7, keep_hidden=True)
    second = sample_trajectory(two_state_hidden_spec, 200, seed=7, keep_hidden=True)
    other = sample_trajectory(two_state_hidden_spec, 200, seed=8)

    assert first == second
    assert not np.array_equal(first.observations, other.observations)
    assert first.hidden_states.shape == (200,)
    assert other.hidden_states is None


def test_markov_trajectory_observes_the_hidden_states(two_state_spec):
    t = sample_trajectory(two_state_spec, 50, seed=1, keep_hidden=True)
    assert_array_equal(t.observations, t.hidden_states)


def test_point_mass_start_is_respected(two_state_kernel):
    spec = ChainSpec(state_count=2, initial=StochasticVector.point_mass(2, 1), transition=two_state_kernel)
    for seed in range(20):
        assert sample_trajectory(spec, 3, seed, keep_hidden=True).hidden_states[0] == 1


def test_zero_probability_symbols_are_never_drawn():
    spec = iid_spec([0.5, 0.0, 0.5], states=2)
    observations = sample_trajectory(spec, 10_000, seed=3).observations
    assert not (observations == 1).any()


def test_long_run_frequencies_match_the_stationary_law(two_state_spec):
    observations = sample_trajectory(two_state_spec, 10 ** 6, seed=0).observations
    frequencies = np.bincount(observations, minlength=2) / observations.size
    assert_allclose(frequencies, TWO_STATE_PI, atol=0.01)


def test_first_state_frequency_is_binomial(two_state_kernel):
    samples = 10 ** 5
    spec = ChainSpec(state_count=2, initial=StochasticVector(TWO_STATE_PI), transition=two_state_kernel)
    sampler = trajectory_sampler(spec)
    generator = rng.stream(21)
    zeros = sum(int(sampler(generator, 1)[0][0] == 0) for _ in range(samples))

    p = 2 / 3
    assert abs(zeros / samples - p) <= 3 * math.sqrt(p * (1 - p) / samples)


@pytest.mark.parametrize('seed', [0, 1, 12345])
def test_deterministic_kernel_has_one_trajectory(seed):
    # 0 -> 1 -> 2 -> 0
    cycle = StochasticMatrix.from_rows([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    labels = StochasticMatrix.from_rows([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    spec = ChainSpec(state_count=3, initial=StochasticVector.point_mass(3, 0), transition=cycle, emission=labels)

    t = sample_trajectory(spec, 7, seed, keep_hidden=True)
    assert_array_equal(t.hidden_states, [0, 1, 2, 0, 1, 2, 0])
    assert_array_equal(t.observations, [1, 0, 1, 1, 0, 1, 1])


def _small_specs() -> dict[str, ChainSpec]:
    generator = np.random.default_rng(5)
    # 混入均匀分布, 每个格子的概率都不会太小
    mixed = 0.8 * generator.dirichlet(np.full(3, 2.0), size=3).T + 0.2 / 3
    emission = 0.8 * generator.dirichlet(np.full(2, 2.0), size=3).T + 0.1
    return {
        'markov-3': ChainSpec(
            state_count=3,
            initial=StochasticVector([0.2, 0.5, 0.3]),
            transition=StochasticMatrix.from_rows([[0.5, 0.3, 0.2], [0.1, 0.6, 0.3], [0.25, 0.25, 0.5]]),
        ),
        'hidden-2x3-point-start': ChainSpec(
            state_count=2,
            initial=StochasticVector.point_mass(2, 0),
            transition=StochasticMatrix.from_rows([[0.9, 0.1], [0.2, 0.8]]),
            emission=StochasticMatrix.from_rows([[0.6, 0.3, 0.1], [0.1, 0.2, 0.7]]),
        ),
        'hidden-3x2-random': ChainSpec(
            state_count=3,
            initial=StochasticVector([0.3, 0.3, 0.4]),
            transition=StochasticMatrix(mixed),
            emission=StochasticMatrix(emission),
        ),
    }


@pytest.mark.parametrize('name', list(_small_specs()))
def test_sampled_law_matches_the_exact_joint_law(name):
    spec, n, samples = _small_specs()[name], 3, 10 ** 6
    m = spec.symbol_count
    place_values = m ** np.arange(n - 1, -1, -1)

    sampler = trajectory_sampler(spec)
    generator = rng.stream(2024)
    counts = np.zeros(m ** n, dtype=np.int64)
    for _ in range(samples):
        counts[int(sampler(generator, n)[1] @ place_values)] += 1
    frequencies = counts.reshape((m,) * n) / samples

    for cell, p in exact_joint_law(spec, n).items():
        assert abs(frequencies[cell] - p) <= 4 * math.sqrt(p * (1 - p) / samples), cell


def test_joint_law_tensor(two_state_spec, two_state_hidden_spec):
    law = joint_law_tensor(two_state_spec, 3)
    assert law.shape == (2, 2, 2)
    assert law.sum() == pytest.approx(1.0)
    assert law[0, 0, 0] == pytest.approx(2 / 3 * 0.9 * 0.9)

    observed = joint_law_tensor(two_state_hidden_spec, 3)
    assert observed.sum() == pytest.approx(1.0)
    # 单步边缘分布是 rho
    assert_allclose(observed.sum(axis=(1, 2)), [0.5, 0.5])
    assert_allclose(joint_law_tensor(two_state_hidden_spec, 3, observed=False), law)


@settings(max_examples=25)
@given(positive_kernels(size=3, min_entry=0.0), stochastic_vectors(size=3, min_entry=0.0))
def test_joint_law_marginals_are_step_laws(kernel, start):
    n = 4
    spec = ChainSpec(state_count=3, initial=StochasticVector(start), transition=kernel)
    law = joint_law_tensor(spec, n, observed=False)
    for i in range(1, n + 1):
        marginal = law.sum(axis=tuple(axis for axis in range(n) if axis != i - 1))
        assert_allclose(marginal, step_law(kernel, spec.initial, i).probs, atol=1e-12)


def test_exact_joint_law(two_state_spec):
    law = exact_joint_law(two_state_spec, 2)
    assert len(law) == 4
    assert law[(0, 0)] == pytest.approx(0.6)
    assert law[(1, 0)] == pytest.approx(1 / 3 * 0.2)


def test_enumeration_guard():
    enumeration_guard('anything', 10, limit=10)
    with pytest.raises(EnumerationLimitError) as e:
        enumeration_guard('anything', 11, limit=10)
    assert e.value.size == 11
    assert e.value.limit == 10


@settings(max_examples=25)
@given(positive_kernels(size=3), stochastic_vectors(size=3))
def test_step_law_converges_to_the_stationary_law(kernel, start):
    pi = stationary_distribution(kernel)
    previous = tv_distance(step_law(kernel, StochasticVector(start), 1), pi)
    for s in range(2, 6):
        current = tv_distance(step_law(kernel, StochasticVector(start), s), pi)
        assert current <= previous + 1e-12
        previous = current
