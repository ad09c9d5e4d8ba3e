import math
import numpy as np
import pytest
from numpy.testing import assert_allclose
from hypothesis import given, settings, strategies as st

from ..chain_core import stationary_distribution
from ..mixing import (
    contraction_coefficient, verify_contraction, power_kernel, tau_table, inverse_mixing_time, fit_ergodicity,
    eta_bar_exact,
    delta_matrix, delta_matrix_exact, delta_inf_norm, delta_1_norm, delta_2_norm, contraction_bound_inf_norm,
)
from ..structs.chain import StochasticVector, StochasticMatrix, ChainSpec
from ..structs.mixing import ErgodicityConstants, DeltaMatrix
from ..structs.exceptions import NotErgodicError
from .conftest import iid_spec, positive_kernels, stochastic_vectors


def test_contraction_coefficient(two_state_kernel):
    assert contraction_coefficient(two_state_kernel) == pytest.approx(0.7)
    assert contraction_coefficient(StochasticMatrix.identity(3)) == 1.0
    assert contraction_coefficient(StochasticMatrix.rank_one([0.5, 0.3, 0.2], 3)) == pytest.approx(0.0, abs=1e-15)
    assert contraction_coefficient(power_kernel(two_state_kernel, 2)) == pytest.approx(0.49)


@given(positive_kernels(size=3), stochastic_vectors(size=3, min_entry=0.0), stochastic_vectors(size=3, min_entry=0.0))
def test_contraction_of_total_variation(kernel, p, q):
    lhs, rhs = verify_contraction(kernel, StochasticVector(p), StochasticVector(q))
    assert lhs <= rhs + 1e-12


@settings(max_examples=30)
@given(positive_kernels(min_entry=0.0), st.integers(1, 4))
def test_contraction_is_submultiplicative(kernel, m):
    kappa = contraction_coefficient(kernel)
    assert contraction_coefficient(power_kernel(kernel, m + 1)) <= \
        kappa * contraction_coefficient(power_kernel(kernel, m)) + 1e-12


def test_tau_table(two_state_kernel):
    taus = tau_table(two_state_kernel, 10)
    assert_allclose(taus, [2 / 3 * 0.7 ** (s - 1) for s in range(1, 11)], rtol=1e-9)
    assert inverse_mixing_time(two_state_kernel, 3) == pytest.approx(taus[2])


def test_fit_ergodicity_two_state(two_state_kernel):
    constants = fit_ergodicity(two_state_kernel, 64)
    assert constants.G == 1.0
    assert constants.theta == pytest.approx(0.7, abs=1e-5)
    assert constants.horizon == 64
    assert not constants.horizon_too_short


def test_fit_ergodicity_iid():
    constants = fit_ergodicity(StochasticMatrix.rank_one([0.5, 0.3, 0.2], 3), 16)
    assert constants.theta == 0.0
    assert constants.G == 1.0


def test_fit_ergodicity_rejects_reducible_kernels():
    with pytest.raises(NotErgodicError):
        fit_ergodicity(StochasticMatrix.identity(2), 8)
    with pytest.raises(ValueError):
        fit_ergodicity(StochasticMatrix.rank_one([0.5, 0.5], 2), 1)


def test_fit_ergodicity_flags_a_short_horizon():
    slow = StochasticMatrix.from_rows([[0.999, 0.001], [0.001, 0.999]])
    assert fit_ergodicity(slow, 4).horizon_too_short


@settings(max_examples=30)
@given(positive_kernels())
def test_fitted_envelope_dominates_tau(kernel):
    constants = fit_ergodicity(kernel, 32)
    assert 0.0 <= constants.theta < 1.0
    assert constants.G >= 1.0
    for s, tau in enumerate(constants.tau_table, start=1):
        assert tau <= constants.envelope(s) + 1e-12


@settings(max_examples=30)
@given(positive_kernels(size=3))
def test_theta_is_the_largest_tau_ratio(kernel):
    constants = fit_ergodicity(kernel, 16)
    taus = [tau for tau in constants.tau_table if tau > 1e-13]
    ratios = [later / earlier for earlier, later in zip(taus, taus[1:])]
    assert constants.theta == pytest.approx(max(ratios, default=0.0), rel=1e-12, abs=1e-15)
    assert constants.G == pytest.approx(max(1.0, constants.tau_table[0]), rel=1e-9)


def test_ergodicity_constants_reject_a_violated_envelope():
    with pytest.raises(ValueError, match='exceeds'):
        ErgodicityConstants(G=1.0, theta=0.1, tau_table=(0.5, 0.4), horizon=2)


def test_eta_bar_of_the_two_state_chain(two_state_spec):
    n = 5
    for i in range(1, n):
        for j in range(i + 1, n + 1):
            assert eta_bar_exact(two_state_spec, n, i, j) == pytest.approx(0.7 ** (j - i), abs=1e-12)


def test_eta_bar_of_extreme_chains():
    assert eta_bar_exact(iid_spec([0.2, 0.8]), 4, 1, 3) == pytest.approx(0.0, abs=1e-12)

    frozen = ChainSpec(state_count=2, initial=StochasticVector.uniform(2), transition=StochasticMatrix.identity(2))
    assert eta_bar_exact(frozen, 3, 1, 2) == pytest.approx(1.0)

    with pytest.raises(ValueError):
        eta_bar_exact(frozen, 3, 2, 2)


def test_eta_bar_is_bounded_by_twice_tau(two_state_hidden_spec):
    constants = fit_ergodicity(two_state_hidden_spec.transition, 8)
    for lag in range(1, 4):
        assert eta_bar_exact(two_state_hidden_spec, 4, 1, 1 + lag) <= 2 * constants.tau_table[lag] + 1e-12


def test_delta_matrix():
    d = delta_matrix(ErgodicityConstants.assumed(1.0, 0.5), 3)
    assert_allclose(d.entries, [[1.0, 1.0, 0.5], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
    assert delta_inf_norm(d) == pytest.approx(2.5)
    assert delta_1_norm(d) == pytest.approx(2.5)

    assert_allclose(delta_matrix(ErgodicityConstants.assumed(1.0, 0.0), 4).entries, np.eye(4))


def test_delta_matrix_validation():
    with pytest.raises(ValueError, match='unit diagonal'):
        DeltaMatrix(entries=[[0.5, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError, match='below the diagonal'):
        DeltaMatrix(entries=[[1.0, 0.0], [0.3, 1.0]])


def test_delta_matrix_exact(two_state_spec):
    d = delta_matrix_exact(two_state_spec, 4)
    expected = np.triu(0.7 ** np.subtract.outer(np.arange(4), np.arange(4)).T.clip(min=0))
    assert_allclose(d.entries, expected, atol=1e-12)


@pytest.mark.parametrize('a', [0.0, 0.3, 0.6, 1.0])
def test_delta_2_norm_of_a_2x2_matrix(a):
    d = DeltaMatrix(entries=[[1.0, a], [0.0, 1.0]])
    assert delta_2_norm(d) == pytest.approx(math.sqrt(1 + a * a / 2 + a * math.sqrt(1 + a * a / 4)), rel=1e-8)


@settings(max_examples=30)
@given(st.floats(1.0, 3.0), st.floats(0.0, 0.95), st.integers(1, 60))
def test_delta_norms(G, theta, n):
    constants = ErgodicityConstants.assumed(G, theta)
    d = delta_matrix(constants, n)
    inf_norm = delta_inf_norm(d)

    assert inf_norm <= contraction_bound_inf_norm(constants) + 1e-12
    assert 1.0 <= delta_2_norm(d) <= math.sqrt(delta_1_norm(d) * inf_norm) + 1e-9


def test_delta_inf_norm_cap_over_lengths(two_state_kernel):
    constants = fit_ergodicity(two_state_kernel)
    cap = contraction_bound_inf_norm(constants)
    assert cap == pytest.approx(2 / 0.3, rel=1e-4)
    for n in (1, 10, 100, 1000):
        assert delta_inf_norm(delta_matrix(constants, n)) <= cap


def test_stationary_law_of_power_kernel(two_state_kernel):
    pi = stationary_distribution(two_state_kernel).probs
    assert_allclose(power_kernel(two_state_kernel, 5).entries @ pi, pi, atol=1e-12)
