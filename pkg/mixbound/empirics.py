"""
Monte Carlo and exact-enumeration checks of the concentration bounds: empirical distributions, deviation
frequencies against every bound, expectation estimates, the Hamming-Lipschitz audit and the exact
lemma suite over tiny random chains.

Trial `t` of an experiment always draws from `rng.stream(seed, t)`, and every per-trial value lands at
index `t`, so reports do not depend on how many workers share the trials.
"""
import math
from fractions import Fraction
from typing import Callable, Iterable
import numpy as np
from joblib import Parallel, delayed

from .log import logger
from .shared import config
from . import rng
from .chain_core import (
    tv_distance, check_ergodic, stationary_distribution, emit_law, trajectory_sampler, joint_law_tensor,
    enumeration_guard, _tv, _probs,
)
from .mixing import contraction_coefficient, verify_contraction, power_kernel, fit_ergodicity, _eta_bar_from_law
from .bounds import (
    dkw_bound, uniform_chernoff_bound, hmm_concentration_bound, expectation_sup_bound, lambda_n,
    empirical_mean_drift_bound, nonstationary_correction,
)
from .structs.chain import StochasticVector, StochasticMatrix, ChainSpec, Trajectory
from .structs.mixing import ErgodicityConstants
from .structs.bounds import BoundQuery, TailBound
from .structs.reports import (
    StatisticName, EmpiricalDistribution, DeviationRow, DeviationReport, ExpectationEstimate, LipschitzAudit,
    LemmaCheck, LemmaSuiteReport,
)
from .structs.exceptions import InputError, DimensionError, EnumerationLimitError

__all__ = (
    'CustomStatistic',
    'resolve_statistic',
    'empirical_distribution',
    'sup_norm_stat',
    'tv_stat',
    'g_stat',
    'h_stat',
    'subset_discrepancy',
    'exact_mean_drift',
    'mc_halfwidth',
    'deviation_experiment',
    'expectation_experiment',
    'lipschitz_audit',
    'random_instance',
    'corner_instances',
    'exact_lemma_suite',
)

experiment_logger = logger.bind(name='empirics')

CustomStatistic = Callable[[np.ndarray], float]
"""maps the observations of one trajectory to `f(Y) / n`"""

_STATISTIC_ALIASES: dict[str, StatisticName] = {
    'sup': 'sup_norm',
    'sup_norm': 'sup_norm',
    'tv': 'total_variation',
    'total_variation': 'total_variation',
    'custom': 'custom_lipschitz',
    'custom_lipschitz': 'custom_lipschitz',
}

SUBSET_STATE_LIMIT = 12
EXPECTATION_SIGMAS = 3.0
AUDIT_CHUNK = 10_000

INEQUALITY_TOLERANCE = 1e-10
IDENTITY_TOLERANCE = 1e-12
SUBMULTIPLICATIVE_POWERS = 6

_DIRICHLET_CONCENTRATIONS = (0.3, 1.0, 3.0)
_SPARSITY = 0.3
_MAX_DRAWS = 100


def resolve_statistic(statistic: str) -> StatisticName:
    try:
        return _STATISTIC_ALIASES[statistic]
    except KeyError:
        raise InputError(
            f'unknown statistic `{statistic}`, expect one of {sorted(_STATISTIC_ALIASES)}'
        ) from None


def empirical_distribution(t: Trajectory) -> EmpiricalDistribution:
    return EmpiricalDistribution(counts=np.bincount(t.observations, minlength=t.symbol_count))


def _deviation(e: EmpiricalDistribution, rho: StochasticVector | np.ndarray) -> np.ndarray:
    probs = _probs(rho)
    if probs.shape != e.counts.shape:
        raise DimensionError(f'empirical distribution over {e.counts.size} symbols, but rho has {probs.size}')
    return np.abs(probs - e.probs)


def sup_norm_stat(e: EmpiricalDistribution, rho: StochasticVector | np.ndarray) -> float:
    """
    `max_y |rho_y - rho_hat_y|`
    """
    return float(_deviation(e, rho).max())


def tv_stat(e: EmpiricalDistribution, rho: StochasticVector | np.ndarray) -> float:
    """
    `TV(rho, rho_hat)`, which is also `sup_E |rho(E) - rho_hat(E)|`
    """
    return 0.5 * float(_deviation(e, rho).sum())


def g_stat(e: EmpiricalDistribution, rho: StochasticVector | np.ndarray) -> float:
    """
    `n * ||rho - rho_hat||_inf`, 1-Lipschitz in the Hamming metric
    """
    _deviation(e, rho)
    return float(np.abs(e.n * _probs(rho) - e.counts).max())


def h_stat(e: EmpiricalDistribution, rho: StochasticVector | np.ndarray) -> float:
    """
    `2n * TV(rho, rho_hat) = sum_y |n rho_y - count_y|`, 2-Lipschitz in the Hamming metric
    """
    _deviation(e, rho)
    return float(np.abs(e.n * _probs(rho) - e.counts).sum())


def subset_discrepancy(rho: StochasticVector | np.ndarray, rho_hat: StochasticVector | np.ndarray) -> float:
    """
    `max_E |rho(E) - rho_hat(E)|` by visiting every one of the `2^k` events

    :raise EnumerationLimitError: more than 12 states
    """
    probs, probs_hat = _probs(rho), _probs(rho_hat)
    if probs.shape != probs_hat.shape or probs.ndim != 1:
        raise DimensionError(f'can not compare distributions of shapes {probs.shape} and {probs_hat.shape}')
    diff = probs - probs_hat
    k = diff.size
    if k > SUBSET_STATE_LIMIT:
        raise EnumerationLimitError(f'the events over {k} states', 2 ** k, 2 ** SUBSET_STATE_LIMIT)

    events = (np.arange(2 ** k)[:, None] >> np.arange(k)) & 1
    return float(np.abs(events @ diff).max())


def exact_mean_drift(spec: ChainSpec, n: int) -> float:
    """
    `TV((1/n) sum_i L(Y_i), rho)`, the exact distance between the mean empirical distribution and `rho = B pi`
    """
    if n < 1:
        raise ValueError(f'n must be positive, but got `{n}`')
    entries = spec.transition.entries
    pi = stationary_distribution(spec.transition)

    law, total = spec.initial.probs, np.zeros(spec.state_count)
    for _ in range(n):
        total += law
        law = entries @ law
    mean_observed = emit_law(spec.effective_emission, StochasticVector(total / n))
    return _tv(mean_observed.probs, emit_law(spec.effective_emission, pi).probs)


def mc_halfwidth(trials: int, delta_mc: float) -> float:
    """
    Hoeffding half-width `sqrt(ln(2 / delta_mc) / (2 trials))` of a frequency over `trials` draws
    """
    if trials < 1:
        raise ValueError(f'trials must be positive, but got `{trials}`')
    return math.sqrt(math.log(2.0 / delta_mc) / (2.0 * trials))


def _statistic_function(name: StatisticName, rho: np.ndarray, n: int,
                        custom: CustomStatistic | None) -> Callable[[np.ndarray], float]:
    m = rho.size
    if name == 'sup_norm':
        return lambda observations: float(np.abs(np.bincount(observations, minlength=m) / n - rho).max())
    if name == 'total_variation':
        return lambda observations: 0.5 * float(np.abs(np.bincount(observations, minlength=m) / n - rho).sum())
    if custom is None:
        raise InputError('statistic `custom_lipschitz` needs a callable')
    return lambda observations: float(custom(observations))


def _trial_values(spec: ChainSpec, n: int, trials: int, seed: int, statistic: Callable[[np.ndarray], float],
                  workers: int) -> np.ndarray:
    sampler = trajectory_sampler(spec)
    values = np.empty(trials)

    def _run_chunk(start: int, stop: int):
        for trial in range(start, stop):
            _, observations = sampler(rng.stream(seed, trial), n)
            values[trial] = statistic(observations)

    if workers <= 1 or trials == 1:
        _run_chunk(0, trials)
        return values

    # 每个 worker 只写自己的下标区间
    chunk = math.ceil(trials / workers)
    Parallel(n_jobs=workers, backend='threading')(
        delayed(_run_chunk)(start, min(start + chunk, trials)) for start in range(0, trials, chunk)
    )
    return values


def _check_run(n: int, trials: int, workers: int):
    if n < 1:
        raise InputError(f'n must be positive, but got `{n}`')
    if trials < 1:
        raise InputError(f'trials must be positive, but got `{trials}`')
    if workers < 1:
        raise InputError(f'workers must be positive, but got `{workers}`')


def _expectation(name: StatisticName, values: np.ndarray, rho: StochasticVector,
                 constants: ErgodicityConstants, n: int) -> ExpectationEstimate:
    if values.size < 2:
        raise InputError('an expectation estimate needs at least 2 trials')
    if name == 'sup_norm':
        bound = expectation_sup_bound(constants, n)
    elif name == 'total_variation':
        bound = lambda_n(rho, constants, n).lambda_
    else:
        raise InputError(f'no expectation bound is known for statistic `{name}`')
    return ExpectationEstimate(
        statistic_name=name,
        estimate=float(values.mean()),
        halfwidth=EXPECTATION_SIGMAS * float(values.std(ddof=1)) / math.sqrt(values.size),
        bound=bound,
    )


def deviation_experiment(
        spec: ChainSpec,
        n: int | None = None,
        trials: int | None = None,
        seed: int | None = None,
        statistic: str = 'sup_norm',
        epsilon_grid: Iterable[float] | None = None,
        *,
        stationary: bool = True,
        workers: int | None = None,
        constants: ErgodicityConstants | None = None,
        custom: CustomStatistic | None = None,
        lipschitz_constant: float = 1.0,
        delta_mc: float | None = None,
        with_expectation: bool = False,
) -> DeviationReport:
    """
    frequency of `{statistic > threshold + epsilon}` over independent trajectories, next to its bound

    - `sup_norm`: threshold and tail of the DKW-type bound
    - `total_variation`: threshold `Lambda_n(rho)` and tail of the uniform Chernoff bound
    - `custom_lipschitz`: `custom(observations)` is `f(Y) / n` for an `f` with Lipschitz constant
      `lipschitz_constant`; the threshold is its Monte Carlo mean plus the 3-sigma half-width

    a nonstationary run starts from `spec.initial` and adds `TV(pi, p1)` to every bound,
    a stationary run (the default) starts from `pi`

    :raise NotErgodicError: the transition kernel is not ergodic
    :raise InputError: empty or nonpositive epsilon grid, bad sizes
    """
    run_defaults = config.run
    n = run_defaults.n if n is None else n
    trials = run_defaults.trials if trials is None else trials
    seed = run_defaults.seed if seed is None else seed
    workers = run_defaults.workers if workers is None else workers
    delta_mc = run_defaults.delta_mc if delta_mc is None else delta_mc
    grid = tuple(run_defaults.epsilon_grid if epsilon_grid is None else epsilon_grid)
    name = resolve_statistic(statistic)

    _check_run(n, trials, workers)
    if not grid:
        raise InputError('the epsilon grid must not be empty')
    if any(epsilon <= 0 for epsilon in grid):
        raise InputError(f'every epsilon must be positive, but got {list(grid)}')

    pi = stationary_distribution(spec.transition)
    rho = emit_law(spec.effective_emission, pi)
    constants = fit_ergodicity(spec.transition) if constants is None else constants
    if stationary:
        run_spec, correction = spec.with_initial(pi), 0.0
    else:
        run_spec, correction = spec, nonstationary_correction(pi, spec.initial)

    experiment_logger.info(
        'deviation experiment on {}: n = {}, {} trials, statistic {}, {} worker(s)',
        spec.spec_id, n, trials, name, workers
    )
    values = _trial_values(run_spec, n, trials, seed, _statistic_function(name, rho.probs, n, custom), workers)
    halfwidth = mc_halfwidth(trials, delta_mc)
    if name == 'custom_lipschitz':
        spread = EXPECTATION_SIGMAS * float(values.std(ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
        custom_threshold = float(values.mean()) + spread

    rows = []
    for epsilon in grid:
        if name == 'sup_norm':
            deviation_bound = dkw_bound(constants, n, epsilon)
            threshold, tail = deviation_bound.threshold, deviation_bound.tail
        elif name == 'total_variation':
            deviation_bound = uniform_chernoff_bound(rho, constants, n, epsilon)
            threshold, tail = deviation_bound.threshold, deviation_bound.tail
        else:
            threshold = custom_threshold
            tail = hmm_concentration_bound(
                BoundQuery(n=n, epsilon=epsilon, constants=constants, lipschitz_constant=lipschitz_constant)
            )

        frequency = float(np.count_nonzero(values > threshold + epsilon)) / trials
        bound = TailBound(raw=tail.value + correction).value
        rows.append(DeviationRow(
            epsilon=epsilon,
            threshold=threshold,
            empirical_frequency=frequency,
            mc_halfwidth=halfwidth,
            bound=bound,
            satisfied=frequency - halfwidth <= bound,
        ))

    expectation = None
    if with_expectation and stationary and name != 'custom_lipschitz' and trials > 1:
        expectation = _expectation(name, values, rho, constants, n)

    report = DeviationReport(
        spec_id=spec.spec_id,
        n=n,
        trials=trials,
        seed=seed,
        statistic_name=name,
        delta_mc=delta_mc,
        stationary=stationary,
        correction=correction,
        lipschitz_constant=lipschitz_constant,
        constants=constants,
        rows=tuple(rows),
        expectation=expectation,
    )
    for row in report.rows:
        if not row.satisfied:
            experiment_logger.error(
                'epsilon = {}: frequency {} exceeds bound {} by more than the half-width {}',
                row.epsilon, row.empirical_frequency, row.bound, row.mc_halfwidth
            )
    if report.passed:
        experiment_logger.success('every one of the {} grid rows is within its bound', len(report.rows))
    return report


def expectation_experiment(
        spec: ChainSpec,
        n: int | None = None,
        trials: int | None = None,
        seed: int | None = None,
        statistic: str = 'sup_norm',
        *,
        workers: int | None = None,
        constants: ErgodicityConstants | None = None,
) -> ExpectationEstimate:
    """
    Monte Carlo mean of `||rho - rho_hat||_inf` (bound: `sqrt((1 + 2 G theta) / (n (1 - theta)))`)
    or of `TV(rho, rho_hat)` (bound: `Lambda_n(rho)`) on a stationary start, with a 3-sigma half-width
    """
    run_defaults = config.run
    n = run_defaults.n if n is None else n
    trials = run_defaults.trials if trials is None else trials
    seed = run_defaults.seed if seed is None else seed
    workers = run_defaults.workers if workers is None else workers
    name = resolve_statistic(statistic)
    _check_run(n, trials, workers)

    pi = stationary_distribution(spec.transition)
    rho = emit_law(spec.effective_emission, pi)
    constants = fit_ergodicity(spec.transition) if constants is None else constants

    values = _trial_values(
        spec.with_initial(pi), n, trials, seed, _statistic_function(name, rho.probs, n, None), workers
    )
    estimate = _expectation(name, values, rho, constants, n)
    experiment_logger.info(
        'E[{}] ~ {:.6f} +- {:.6f}, bound {:.6f}', name, estimate.estimate, estimate.halfwidth, estimate.bound
    )
    return estimate


def _row_counts(rows: np.ndarray, m: int) -> np.ndarray:
    offsets = rows + m * np.arange(rows.shape[0])[:, None]
    return np.bincount(offsets.ravel(), minlength=rows.shape[0] * m).reshape(rows.shape[0], m)


def _exact_ratio(counts_x: np.ndarray, counts_y: np.ndarray, distance: int, exact_scaled: list[Fraction],
                 reduce: Callable[[list[Fraction]], Fraction]) -> Fraction:
    deviation_x = [abs(scaled - int(count)) for scaled, count in zip(exact_scaled, counts_x)]
    deviation_y = [abs(scaled - int(count)) for scaled, count in zip(exact_scaled, counts_y)]
    return abs(reduce(deviation_x) - reduce(deviation_y)) / distance


def _audit_batch(x: np.ndarray, y: np.ndarray, scaled: np.ndarray,
                 exact_scaled: list[Fraction]) -> tuple[float, float]:
    """
    largest `|g(x) - g(y)| / d_H` and `|h(x) - h(y)| / d_H` of a batch of pairs; a float ratio over its
    Lipschitz constant is recomputed in exact rationals before it counts
    """
    distance = np.count_nonzero(x != y, axis=1)
    differ = distance > 0
    if not differ.any():
        return 0.0, 0.0
    x, y, distance = x[differ], y[differ], distance[differ]

    counts_x, counts_y = _row_counts(x, scaled.size), _row_counts(y, scaled.size)
    deviation_x, deviation_y = np.abs(scaled - counts_x), np.abs(scaled - counts_y)
    g_ratio = np.abs(deviation_x.max(axis=1) - deviation_y.max(axis=1)) / distance
    h_ratio = np.abs(deviation_x.sum(axis=1) - deviation_y.sum(axis=1)) / distance

    for ratios, lipschitz, reduce in ((g_ratio, 1.0, max), (h_ratio, 2.0, sum)):
        for index in np.flatnonzero(ratios > lipschitz):
            ratios[index] = float(_exact_ratio(
                counts_x[index], counts_y[index], int(distance[index]), exact_scaled, reduce
            ))
    return float(g_ratio.max()), float(h_ratio.max())


def _single_site_perturbations(x: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    n = x.size
    positions = np.repeat(np.arange(n), m - 1)
    symbols = (x[positions] + np.tile(np.arange(1, m), n)) % m
    base = np.tile(x, (positions.size, 1))
    perturbed = base.copy()
    perturbed[np.arange(positions.size), positions] = symbols
    return base, perturbed


def lipschitz_audit(rho: StochasticVector, n: int, pairs: int | None = None, seed: int | None = None) -> LipschitzAudit:
    """
    max of `|g(x) - g(y)| / d_H(x, y)` and of `|h(x) - h(y)| / d_H(x, y)` with `g = n ||rho - rho_hat||_inf`
    and `h = 2n TV(rho, rho_hat)`, over `pairs` random pairs and every single-site change of one more
    random trajectory; the ratios must not exceed 1 and 2, with no tolerance

    a pair is a trajectory drawn iid from `rho` and a copy with a uniformly sized random set of sites redrawn
    """
    pairs = config.run.pairs if pairs is None else pairs
    seed = config.run.seed if seed is None else seed
    if pairs < 1:
        raise InputError(f'pairs must be positive, but got `{pairs}`')
    if n < 1:
        raise InputError(f'n must be positive, but got `{n}`')

    probs = _probs(rho)
    m = probs.size
    scaled = n * probs
    exact_scaled = [Fraction(float(p)) * n for p in probs]
    generator = rng.stream(seed)

    max_g = max_h = 0.0
    for start in range(0, pairs, AUDIT_CHUNK):
        size = min(AUDIT_CHUNK, pairs - start)
        x = generator.choice(m, size=(size, n), p=probs)
        distances = generator.integers(1, n + 1, size=size)
        keys = generator.random((size, n))
        cut = np.sort(keys, axis=1)[np.arange(size), distances - 1]
        redraw = keys <= cut[:, None]
        y = x.copy()
        y[redraw] = generator.choice(m, size=int(np.count_nonzero(redraw)), p=probs)

        batch_g, batch_h = _audit_batch(x, y, scaled, exact_scaled)
        max_g, max_h = max(max_g, batch_g), max(max_h, batch_h)

    perturbations = 0
    if m > 1:
        base, perturbed = _single_site_perturbations(generator.choice(m, size=n, p=probs), m)
        perturbations = base.shape[0]
        batch_g, batch_h = _audit_batch(base, perturbed, scaled, exact_scaled)
        max_g, max_h = max(max_g, batch_g), max(max_h, batch_h)

    audit = LipschitzAudit(
        n=n, pairs=pairs, perturbations=perturbations, seed=seed, max_g_ratio=max_g, max_h_ratio=max_h
    )
    if audit.passed:
        experiment_logger.success('Lipschitz audit: max ratios {} (g) and {} (h)', max_g, max_h)
    else:
        experiment_logger.error('Lipschitz audit failed: max ratios {} (g) and {} (h)', max_g, max_h)
    return audit


def _random_columns(generator: np.random.Generator, rows: int, columns: int, sparsity: float) -> np.ndarray:
    alpha = float(generator.choice(_DIRICHLET_CONCENTRATIONS))
    entries = generator.dirichlet(np.full(rows, alpha), size=columns).T
    if sparsity > 0 and rows > 1:
        drop = generator.random(entries.shape) < sparsity
        # 每列保留最大的一项
        drop[np.argmax(entries, axis=0), np.arange(columns)] = False
        entries = np.where(drop, 0.0, entries)
        entries /= entries.sum(axis=0)
    return entries


def random_instance(seed: int, max_states: int = 4, max_symbols: int = 4) -> ChainSpec:
    """
    a tiny random ergodic chain: Dirichlet columns with random zeros, non-ergodic draws are rejected,
    a quarter of the initial laws are point masses and most instances get an emission kernel

    the same seed gives the same instance
    """
    if max_states < 2 or max_symbols < 2:
        raise ValueError(f'expect at least 2 states and 2 symbols, but got {max_states} and {max_symbols}')
    generator = rng.stream(seed)

    k = int(generator.integers(2, max_states + 1))
    for _ in range(_MAX_DRAWS):
        transition = _random_columns(generator, k, k, _SPARSITY)
        if check_ergodic(transition):
            break
    else:
        transition = _random_columns(generator, k, k, 0.0)

    if generator.random() < 0.25:
        initial = StochasticVector.point_mass(k, int(generator.integers(k)))
    else:
        initial = StochasticVector(_random_columns(generator, k, 1, 0.0)[:, 0])

    emission = None
    if generator.random() < 0.7:
        m = int(generator.integers(2, max_symbols + 1))
        emission = StochasticMatrix(_random_columns(generator, m, k, _SPARSITY))

    return ChainSpec(
        state_count=k, initial=initial, transition=StochasticMatrix(transition), emission=emission,
        name=f'random-{rng.normalize_seed(seed)}'
    )


def corner_instances() -> dict[str, ChainSpec]:
    """
    the fixed instances every suite run covers on top of the random ones
    """
    two_state = StochasticMatrix.from_rows([[0.9, 0.1], [0.2, 0.8]])
    two_state_pi = StochasticVector([2 / 3, 1 / 3])
    rank_one = StochasticMatrix.rank_one([0.5, 0.3, 0.2], 3)
    emission = StochasticMatrix.from_rows([[0.7, 0.3], [0.1, 0.9]])
    return {
        'rank_one': ChainSpec(state_count=3, initial=StochasticVector([0.2, 0.2, 0.6]), transition=rank_one),
        'rank_one_hidden': ChainSpec(
            state_count=3, initial=StochasticVector.point_mass(3, 2), transition=rank_one,
            emission=StochasticMatrix.from_rows([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]),
        ),
        'two_state': ChainSpec(state_count=2, initial=two_state_pi, transition=two_state),
        'point_mass_start': ChainSpec(
            state_count=2, initial=StochasticVector.point_mass(2, 0), transition=two_state
        ),
        'two_state_hidden': ChainSpec(
            state_count=2, initial=StochasticVector.point_mass(2, 1), transition=two_state, emission=emission
        ),
    }


class _Tally:
    """
    running worst gap and failing instances of one check
    """

    def __init__(self, name: str, statement: str, tolerance: float, *, identity: bool = False) -> None:
        self.name = name
        self.statement = statement
        self.tolerance = tolerance
        self.identity = identity
        self.checked = 0
        self.worst_gap = -math.inf
        self.failing: list[str] = []

    def record(self, label: str, lhs: float, rhs: float):
        gap = abs(lhs - rhs) if self.identity else lhs - rhs
        self.checked += 1
        self.worst_gap = max(self.worst_gap, gap)
        if gap > self.tolerance and label not in self.failing:
            experiment_logger.error('{} violated on {}: lhs {!r}, rhs {!r}', self.name, label, lhs, rhs)
            self.failing.append(label)

    def result(self) -> LemmaCheck:
        return LemmaCheck(
            name=self.name,
            statement=self.statement,
            checked=self.checked,
            worst_gap=self.worst_gap if self.checked else 0.0,
            tolerance=self.tolerance,
            failing_instances=tuple(self.failing),
        )


def _new_tallies() -> dict[str, _Tally]:
    tallies = (
        _Tally('markov_contraction', 'TV(A p, A q) <= kappa(A) TV(p, q)', INEQUALITY_TOLERANCE),
        _Tally('ergodic_contraction', 'kappa(A^m) <= 2 G theta^m, m = 1..6', INEQUALITY_TOLERANCE),
        _Tally('submultiplicativity', 'kappa(A^(m+1)) <= kappa(A) kappa(A^m), m = 1..6', IDENTITY_TOLERANCE),
        _Tally('eta_tau', 'eta_bar_ij <= 2 tau_(j-i+1)', INEQUALITY_TOLERANCE),
        _Tally('tau_envelope', '2 tau_(j-i+1) <= 2 G theta^(j-i)', INEQUALITY_TOLERANCE),
        _Tally('hmm_domination', 'eta_bar_ij(Y) <= eta_bar_ij(X) of the hidden chain', INEQUALITY_TOLERANCE),
        _Tally('law_domination', 'TV(L(Y), L(Y\')) <= TV(L(X), L(X\')) for kernels A, A\' and one B',
               INEQUALITY_TOLERANCE),
        _Tally('initial_law_identity', 'TV(L(X), L(X\')) = TV(xi, xi\') for one kernel A', IDENTITY_TOLERANCE,
               identity=True),
        _Tally('nearly_stationary', 'TV(L(Y), L(Y\')) <= TV(pi, pi\')', INEQUALITY_TOLERANCE),
        _Tally('mean_drift', 'TV(E rho_hat - rho) <= G / ((1 - theta) n)', INEQUALITY_TOLERANCE),
        _Tally('tv_events', 'TV(rho, rho_hat) = max_E |rho(E) - rho_hat(E)|', IDENTITY_TOLERANCE, identity=True),
    )
    return {tally.name: tally for tally in tallies}


def _instance_length(spec: ChainSpec, generator: np.random.Generator, limit: int) -> int:
    alphabet = max(spec.state_count, spec.symbol_count)
    n = int(generator.integers(2, 6))
    while n > 2 and alphabet ** n > limit:
        n -= 1
    enumeration_guard(f'the joint law of {spec.spec_id} over {n} steps', alphabet ** n, limit)
    return n


def _check_instance(label: str, spec: ChainSpec, generator: np.random.Generator, limit: int,
                    tallies: dict[str, _Tally]) -> int:
    """
    run every check on one instance, return the number of Markov eta_bar / kappa equalities seen
    """
    k, a = spec.state_count, spec.transition
    n = _instance_length(spec, generator, limit)
    constants = fit_ergodicity(a, horizon=max(config.run.horizon, SUBMULTIPLICATIVE_POWERS + 2))
    taus = constants.tau_table

    p = StochasticVector(generator.dirichlet(np.ones(k)))
    q = StochasticVector(generator.dirichlet(np.ones(k)))
    tallies['markov_contraction'].record(label, *verify_contraction(a, p, q))

    kappa = contraction_coefficient(a)
    kappas = [kappa]
    for m in range(1, SUBMULTIPLICATIVE_POWERS + 1):
        kappas.append(contraction_coefficient(power_kernel(a, m + 1)))
        tallies['ergodic_contraction'].record(label, kappas[m - 1], 2.0 * constants.G * constants.theta ** m)
        tallies['submultiplicativity'].record(label, kappas[m], kappa * kappas[m - 1])

    observed_law = joint_law_tensor(spec, n)
    hidden_law = joint_law_tensor(spec.underlying_markov(), n)
    fully_supported = bool((a.entries > 0).all() and (spec.initial.probs > 0).all())
    equalities = 0
    for i in range(1, n):
        for j in range(i + 1, n + 1):
            lag = j - i
            eta = _eta_bar_from_law(observed_law, i, j)
            kappa_lag = kappas[lag - 1]
            tallies['eta_tau'].record(label, eta, 2.0 * taus[lag])
            tallies['tau_envelope'].record(label, 2.0 * taus[lag], 2.0 * constants.G * constants.theta ** lag)
            if spec.is_hidden:
                # 非满支撑时 X 的历史不一定都可实现, 改用全部状态对上的系数
                markov_eta = _eta_bar_from_law(hidden_law, i, j) if fully_supported else kappa_lag
                tallies['hmm_domination'].record(label, eta, markov_eta)
            elif abs(eta - kappa_lag) <= IDENTITY_TOLERANCE:
                equalities += 1

    xi, xi_prime = spec.initial, StochasticVector(generator.dirichlet(np.ones(k)))
    a_prime = StochasticMatrix(_random_columns(generator, k, k, _SPARSITY))
    other = ChainSpec(state_count=k, initial=xi_prime, transition=a_prime, emission=spec.emission)
    tallies['law_domination'].record(
        label,
        _tv(observed_law.ravel(), joint_law_tensor(other, n).ravel()),
        _tv(hidden_law.ravel(), joint_law_tensor(other, n, observed=False).ravel()),
    )

    restarted = spec.with_initial(xi_prime)
    tallies['initial_law_identity'].record(
        label,
        _tv(hidden_law.ravel(), joint_law_tensor(restarted, n, observed=False).ravel()),
        tv_distance(xi, xi_prime),
    )

    pi = stationary_distribution(a)
    tallies['nearly_stationary'].record(
        label,
        _tv(joint_law_tensor(spec.with_initial(pi), n).ravel(), joint_law_tensor(restarted, n).ravel()),
        tv_distance(pi, xi_prime),
    )

    tallies['mean_drift'].record(label, exact_mean_drift(spec, n), empirical_mean_drift_bound(constants, n))

    rho = emit_law(spec.effective_emission, pi)
    _, observations = trajectory_sampler(spec)(generator, n)
    rho_hat = EmpiricalDistribution(counts=np.bincount(observations, minlength=spec.symbol_count))
    tallies['tv_events'].record(label, tv_stat(rho_hat, rho), subset_discrepancy(rho, rho_hat.probs))
    return equalities


def exact_lemma_suite(
        limit: int | None = None,
        *,
        seed: int | None = None,
        instances: int | None = None,
        extra: dict[str, ChainSpec] | None = None,
) -> LemmaSuiteReport:
    """
    check every exact inequality and identity on `instances` random tiny chains (at most 4 states and
    4 symbols, at most 5 steps), the corner cases and any `extra` chains

    an instance gets the longest length in 2..5 (drawn) whose joint law fits `limit`

    :raise EnumerationLimitError: `limit` is over the global enumeration guard, or an instance does not fit
    """
    run_defaults = config.run
    limit = run_defaults.limit if limit is None else limit
    seed = run_defaults.seed if seed is None else seed
    instances = run_defaults.instances if instances is None else instances
    guard = config.guards.enumeration_limit
    if limit > guard:
        raise EnumerationLimitError('one exact lemma suite instance', limit, guard)
    if instances < 0:
        raise InputError(f'instances must not be negative, but got `{instances}`')

    cases: list[tuple[str, ChainSpec]] = []
    for index in range(instances):
        instance_seed = rng.derive_seed(seed, index)
        cases.append((f'seed={instance_seed}', random_instance(instance_seed)))
    cases.extend((f'corner:{name}', spec) for name, spec in corner_instances().items())
    cases.extend((f'spec:{name}', spec) for name, spec in (extra or {}).items())

    experiment_logger.info('exact lemma suite: {} instances, enumeration limit {}', len(cases), limit)
    tallies = _new_tallies()
    equalities = 0
    for index, (label, spec) in enumerate(cases):
        equalities += _check_instance(label, spec, rng.stream(seed, index, 1), limit, tallies)

    if equalities:
        experiment_logger.debug('eta_bar_ij = kappa(A^(j-i)) observed {} times on Markov instances', equalities)

    report = LemmaSuiteReport(
        seed=seed,
        instances=len(cases),
        limit=limit,
        checks=tuple(tally.result() for tally in tallies.values()),
        equality_observations=equalities,
    )
    if report.passed:
        experiment_logger.success('all {} checks hold on {} instances', len(report.checks), len(cases))
    return report
