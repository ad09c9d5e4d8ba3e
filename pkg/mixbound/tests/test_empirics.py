import math
import numpy as np
import pytest
from numpy.testing import assert_allclose
from hypothesis import given, settings, strategies as st

from ..chain_core import check_ergodic, sample_trajectory
from ..mixing import fit_ergodicity
from ..bounds import empirical_mean_drift_bound
from ..empirics import (
    resolve_statistic, empirical_distribution, sup_norm_stat, tv_stat, g_stat, h_stat, subset_discrepancy,
    exact_mean_drift, mc_halfwidth, deviation_experiment, expectation_experiment, lipschitz_audit,
    random_instance, corner_instances, exact_lemma_suite,
)
from ..structs.chain import StochasticVector, StochasticMatrix, ChainSpec, Trajectory
from ..structs.reports import EmpiricalDistribution
from ..structs.exceptions import InputError, DimensionError, EnumerationLimitError, NotErgodicError
from .conftest import TWO_STATE_PI, iid_spec, stochastic_vectors


def test_resolve_statistic():
    assert resolve_statistic('sup') == 'sup_norm'
    assert resolve_statistic('tv') == 'total_variation'
    assert resolve_statistic('custom') == 'custom_lipschitz'
    with pytest.raises(InputError, match='unknown statistic'):
        resolve_statistic('median')


def test_empirical_distribution():
    e = empirical_distribution(Trajectory(observations=[0, 1, 0, 1], symbol_count=3))
    assert e.n == 4
    assert_allclose(e.probs, [0.5, 0.5, 0.0])

    merged = e.merge(EmpiricalDistribution(counts=[0, 0, 4]))
    assert merged.n == 8
    assert_allclose(merged.probs, [0.25, 0.25, 0.5])


def test_statistics_of_one_distribution():
    e = EmpiricalDistribution(counts=[2, 2])
    rho = StochasticVector(TWO_STATE_PI)
    assert sup_norm_stat(e, rho) == pytest.approx(1 / 6)
    assert tv_stat(e, rho) == pytest.approx(1 / 6)
    assert g_stat(e, rho) == pytest.approx(4 / 6)
    assert h_stat(e, rho) == pytest.approx(8 / 6)

    with pytest.raises(DimensionError):
        sup_norm_stat(e, StochasticVector.uniform(3))


@given(stochastic_vectors(min_entry=0.0), st.lists(st.integers(0, 4), min_size=1, max_size=40))
def test_g_and_h_scale_the_norms(rho, observations):
    size = rho.size
    e = EmpiricalDistribution(counts=np.bincount([y % size for y in observations], minlength=size))
    assert g_stat(e, rho) == pytest.approx(e.n * sup_norm_stat(e, rho), abs=1e-9)
    assert h_stat(e, rho) == pytest.approx(2 * e.n * tv_stat(e, rho), abs=1e-9)


def test_single_site_change_moves_h_by_two():
    rho = StochasticVector.uniform(2)
    base = np.array([0, 0, 1, 0])
    for site in range(base.size):
        changed = base.copy()
        changed[site] = 1 - changed[site]
        difference = abs(
            h_stat(EmpiricalDistribution(counts=np.bincount(base, minlength=2)), rho)
            - h_stat(EmpiricalDistribution(counts=np.bincount(changed, minlength=2)), rho)
        )
        assert difference in (0.0, 2.0)


@given(st.integers(1, 8).flatmap(
    lambda k: st.tuples(stochastic_vectors(size=k, min_entry=0.0), stochastic_vectors(size=k, min_entry=0.0))
))
def test_total_variation_is_the_largest_event_discrepancy(pair):
    p, q = pair
    assert subset_discrepancy(p, q) == pytest.approx(0.5 * np.abs(p - q).sum(), abs=1e-12)


def test_subset_discrepancy_guards():
    with pytest.raises(EnumerationLimitError):
        subset_discrepancy(StochasticVector.uniform(13), StochasticVector.uniform(13))
    with pytest.raises(DimensionError):
        subset_discrepancy(StochasticVector.uniform(2), StochasticVector.uniform(3))


def test_exact_mean_drift(two_state_spec, two_state_kernel):
    assert exact_mean_drift(two_state_spec, 50) == pytest.approx(0.0, abs=1e-12)

    start = ChainSpec(state_count=2, initial=StochasticVector.point_mass(2, 0), transition=two_state_kernel)
    constants = fit_ergodicity(two_state_kernel)
    for n in (10, 100):
        drift = exact_mean_drift(start, n)
        assert drift == pytest.approx((1 - 0.7 ** n) / (0.3 * n) / 3)
        assert drift <= empirical_mean_drift_bound(constants, n)


def test_mc_halfwidth():
    assert mc_halfwidth(1, 1e-3) == pytest.approx(1.9494, abs=1e-3)
    assert mc_halfwidth(10_000, 1e-3) == pytest.approx(math.sqrt(math.log(2000) / 20_000))
    with pytest.raises(ValueError):
        mc_halfwidth(0, 1e-3)


def test_deviation_experiment_on_an_iid_chain():
    report = deviation_experiment(iid_spec([0.5, 0.5]), n=1000, trials=2000, seed=5, epsilon_grid=(0.05,))
    assert report.constants.G == 1.0
    assert report.constants.theta == 0.0
    row, = report.rows
    assert row.threshold == pytest.approx(2 * 0.5 / math.sqrt(1000))
    assert row.bound == pytest.approx(math.exp(-1.25))
    assert report.passed


def test_dkw_type_bound_holds_on_the_two_state_chain(two_state_spec):
    report = deviation_experiment(
        two_state_spec, n=1000, trials=10_000, seed=0, statistic='sup', epsilon_grid=(0.02, 0.05, 0.1, 0.2),
        with_expectation=True,
    )
    assert report.passed
    assert all(row.satisfied for row in report.rows)
    assert report.expectation.statistic_name == 'sup_norm'
    assert report.expectation.satisfied


def test_uniform_chernoff_bound_holds_on_a_hidden_chain(two_state_hidden_spec):
    report = deviation_experiment(
        two_state_hidden_spec, n=1000, trials=10_000, seed=1, statistic='tv', with_expectation=True
    )
    assert report.statistic_name == 'total_variation'
    assert report.passed
    assert report.expectation.satisfied


@pytest.mark.parametrize('p', [0.1, 0.5])
@pytest.mark.parametrize('n', [100, 1000])
def test_expected_sup_deviation_of_bernoulli_draws(p, n):
    estimate = expectation_experiment(iid_spec([1 - p, p]), n=n, trials=4000, seed=11, statistic='sup')
    sigma = math.sqrt(p * (1 - p) / n)
    assert sigma / math.sqrt(2) - estimate.halfwidth <= estimate.estimate <= sigma + estimate.halfwidth
    assert estimate.satisfied


@pytest.mark.parametrize('probs', [[0.5, 0.5], [0.2, 0.3, 0.5]])
def test_expected_sup_deviation_decreases_with_n(probs):
    estimates = [
        expectation_experiment(iid_spec(probs), n=n, trials=2000, seed=13, statistic='sup')
        for n in (10 ** 2, 10 ** 3, 10 ** 4)
    ]
    for shorter, longer in zip(estimates, estimates[1:]):
        assert longer.estimate <= shorter.estimate + shorter.halfwidth + longer.halfwidth


def test_expected_tv_of_a_uniform_law_is_of_order_lambda():
    n = 100
    estimate = expectation_experiment(iid_spec(np.full(4, 0.25)), n=n, trials=4000, seed=2, statistic='tv')
    assert estimate.bound == pytest.approx(0.1)
    assert estimate.estimate - estimate.halfwidth <= estimate.bound
    assert estimate.estimate + estimate.halfwidth >= estimate.bound / 4 - 1 / (8 * math.sqrt(n))

    report = deviation_experiment(iid_spec(np.full(4, 0.25)), n=n, trials=4000, seed=2, statistic='tv')
    assert report.passed


def test_nonstationary_start_adds_the_correction(two_state_kernel):
    start = ChainSpec(state_count=2, initial=StochasticVector.point_mass(2, 0), transition=two_state_kernel)
    report = deviation_experiment(
        start, n=1000, trials=2000, seed=3, epsilon_grid=(0.05,), stationary=False, with_expectation=True
    )
    assert report.correction == pytest.approx(1 / 3)
    tail = math.exp(-1000 * (1 - report.constants.theta) ** 2 * 0.05 ** 2 / (2 * report.constants.G ** 2))
    assert report.rows[0].bound == pytest.approx(min(1.0, tail + 1 / 3))
    assert report.expectation is None
    assert report.passed


def test_custom_statistic(two_state_spec):
    report = deviation_experiment(
        two_state_spec, n=500, trials=1000, seed=4, statistic='custom', epsilon_grid=(0.05, 0.1),
        custom=lambda observations: float(np.mean(observations)),
    )
    assert report.statistic_name == 'custom_lipschitz'
    assert report.rows[0].threshold == report.rows[1].threshold
    assert report.passed

    with pytest.raises(InputError):
        deviation_experiment(two_state_spec, n=10, trials=2, statistic='custom')


def test_reports_do_not_depend_on_the_worker_count(two_state_hidden_spec):
    kwargs = dict(n=300, trials=400, seed=9, statistic='tv', with_expectation=True)
    single = deviation_experiment(two_state_hidden_spec, workers=1, **kwargs)
    threaded = deviation_experiment(two_state_hidden_spec, workers=4, **kwargs)
    assert single.model_dump() == threaded.model_dump()
    assert single == deviation_experiment(two_state_hidden_spec, workers=1, **kwargs)


def test_deviation_experiment_rejects_bad_input(two_state_spec):
    with pytest.raises(InputError):
        deviation_experiment(two_state_spec, n=10, trials=10, epsilon_grid=())
    with pytest.raises(InputError):
        deviation_experiment(two_state_spec, n=10, trials=10, epsilon_grid=(0.1, -0.1))
    with pytest.raises(InputError):
        deviation_experiment(two_state_spec, n=0, trials=10)

    frozen = ChainSpec(state_count=2, initial=StochasticVector.uniform(2), transition=StochasticMatrix.identity(2))
    with pytest.raises(NotErgodicError):
        deviation_experiment(frozen, n=10, trials=10)


def test_expectation_needs_two_trials(two_state_spec):
    with pytest.raises(InputError):
        expectation_experiment(two_state_spec, n=10, trials=1)


def test_lipschitz_audit():
    audit = lipschitz_audit(StochasticVector.uniform(5), 50, pairs=10 ** 5, seed=0)
    assert audit.perturbations == 50 * 4
    assert audit.max_g_ratio <= 1.0
    assert audit.max_h_ratio <= 2.0
    assert audit.passed


def test_lipschitz_audit_on_a_skewed_law():
    audit = lipschitz_audit(StochasticVector([0.1, 0.2, 0.3, 0.4]), 17, pairs=5000, seed=1)
    assert audit.passed
    assert audit.max_g_ratio > 0.0
    assert audit.perturbations == 17 * 3


def test_random_instance():
    for seed in range(30):
        spec = random_instance(seed)
        assert spec == random_instance(seed)
        assert 2 <= spec.state_count <= 4
        assert 2 <= spec.symbol_count <= 4
        assert check_ergodic(spec.transition)
        assert spec.name == f'random-{seed}'


def test_corner_instances(two_state_kernel):
    corners = corner_instances()
    assert set(corners) == {'rank_one', 'rank_one_hidden', 'two_state', 'point_mass_start', 'two_state_hidden'}
    assert corners['two_state'].transition == two_state_kernel


def test_exact_lemma_suite_passes():
    report = exact_lemma_suite(seed=0, instances=200)
    assert report.instances == 200 + len(corner_instances())
    assert report.passed, [check for check in report.checks if not check.passed]
    assert all(check.checked > 0 for check in report.checks)
    assert report.equality_observations > 0


def test_exact_lemma_suite_is_reproducible():
    extra = {'two-state': random_instance(123)}
    first = exact_lemma_suite(seed=42, instances=5, extra=extra)
    assert first == exact_lemma_suite(seed=42, instances=5, extra=extra)
    assert first.instances == 5 + len(corner_instances()) + 1


def test_exact_lemma_suite_respects_the_guard():
    with pytest.raises(EnumerationLimitError):
        exact_lemma_suite(10 ** 8, instances=1)
    with pytest.raises(EnumerationLimitError):
        # corner:rank_one 有 3 个状态, 两步也放不下
        exact_lemma_suite(8, seed=0, instances=0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_sampled_statistics_stay_in_range(seed):
    spec = random_instance(seed)
    e = empirical_distribution(sample_trajectory(spec, 64, seed))
    assert 0.0 <= tv_stat(e, np.full(spec.symbol_count, 1 / spec.symbol_count)) <= 1.0
