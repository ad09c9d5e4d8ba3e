"""
Finite-state distributions, kernels and hidden Markov chains: total variation distance, stationary laws,
exact joint laws and seeded trajectory sampling.

Kernels are column-stochastic (`A[x_next, x] = A(x_next | x)`), so a law `p` moves one step as `A @ p`.
"""
import numpy as np

from .log import logger
from .shared import config
from . import rng
from ._kernels import cumulative_columns, walk_chain, emit_symbols
from .structs.chain import StochasticVector, StochasticMatrix, ChainSpec, Trajectory
from .structs.exceptions import DimensionError, NotErgodicError, EnumerationLimitError, ConvergenceError

__all__ = (
    'tv_distance',
    'check_ergodic',
    'stationary_distribution',
    'step_law',
    'emit_law',
    'stationary_observation_law',
    'trajectory_sampler',
    'sample_trajectory',
    'joint_law_tensor',
    'exact_joint_law',
    'enumeration_guard',
)

chain_logger = logger.bind(name='chain_core')


def _tv(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def _probs(p: StochasticVector | np.ndarray) -> np.ndarray:
    return p.probs if isinstance(p, StochasticVector) else np.asarray(p, dtype=np.float64)


def _entries(a: StochasticMatrix | np.ndarray) -> np.ndarray:
    return a.entries if isinstance(a, StochasticMatrix) else np.asarray(a, dtype=np.float64)


def tv_distance(p: StochasticVector | np.ndarray, q: StochasticVector | np.ndarray) -> float:
    """
    total variation distance, half the l1 distance
    """
    p, q = _probs(p), _probs(q)
    if p.shape != q.shape:
        raise DimensionError(f'can not compare distributions of sizes {p.size} and {q.size}')
    return _tv(p, q)


def check_ergodic(a: StochasticMatrix | np.ndarray) -> bool:
    """
    primitivity test: some boolean power `A^m`, `m <= (k-1)^2 + 1`, is entrywise positive (Wielandt bound)
    """
    entries = _entries(a)
    k = entries.shape[0]
    if entries.shape != (k, k):
        raise DimensionError(f'a transition kernel must be square, but got shape {entries.shape}')

    support = (entries > 0).astype(np.int64)
    power = support.copy()
    for _ in range((k - 1) ** 2 + 1):
        if power.all():
            return True
        # 只关心是否为正, 截断以免整数溢出
        power = np.minimum(power @ support, 1)
    return False


def _gth(entries: np.ndarray) -> np.ndarray:
    """
    Grassmann-Taksar-Heyman elimination for the stationary vector of a column-stochastic kernel,
    subtraction free, so it stays accurate for nearly decomposable kernels
    """
    t = np.array(entries, dtype=np.float64)
    k = t.shape[0]
    for n in range(k - 1, 0, -1):
        outflow = t[:n, n].sum()
        t[n, :n] /= outflow
        t[:n, :n] += np.outer(t[:n, n], t[n, :n])

    pi = np.zeros(k)
    pi[0] = 1.0
    for n in range(1, k):
        pi[n] = t[n, :n] @ pi[:n]
    return pi / pi.sum()


def stationary_distribution(a: StochasticMatrix) -> StochasticVector:
    """
    the unique stochastic `pi` with `A pi = pi`

    :raise NotErgodicError: the kernel is reducible or periodic
    """
    if not check_ergodic(a):
        raise NotErgodicError('the transition kernel is not ergodic (it is reducible or periodic)')

    entries = _entries(a)
    pi = _gth(entries)
    tolerance = config.guards.stationary_tolerance
    residual = float(np.abs(entries @ pi - pi).sum())
    refinements = 0
    while residual > tolerance and refinements < 1000:
        pi = entries @ pi
        pi /= pi.sum()
        residual = float(np.abs(entries @ pi - pi).sum())
        refinements += 1

    if residual > tolerance:
        raise ConvergenceError(f'stationary vector residual {residual:.3e} is above {tolerance:.1e}')
    if refinements:
        chain_logger.debug('stationary vector refined by {} power steps, residual {:.3e}', refinements, residual)
    return StochasticVector(pi)


def step_law(a: StochasticMatrix, p: StochasticVector, s: int) -> StochasticVector:
    """
    `L(X_s)` of a chain started from `p`, i.e. `A^(s-1) p` by repeated matrix-vector products
    """
    if s < 1:
        raise ValueError(f'the step index starts at 1, but got `{s}`')
    entries, law = _entries(a), _probs(p)
    if entries.shape[1] != law.size:
        raise DimensionError(f'kernel of shape {entries.shape} can not act on a distribution of size {law.size}')

    for _ in range(s - 1):
        law = entries @ law
    return StochasticVector(law)


def emit_law(b: StochasticMatrix, p: StochasticVector) -> StochasticVector:
    """
    the observation law `B p` of hidden states distributed as `p`
    """
    entries, law = _entries(b), _probs(p)
    if entries.shape[1] != law.size:
        raise DimensionError(f'emission of shape {entries.shape} can not act on a distribution of size {law.size}')
    return StochasticVector(entries @ law)


def stationary_observation_law(spec: ChainSpec) -> StochasticVector:
    """
    `rho = B pi`
    """
    return emit_law(spec.effective_emission, stationary_distribution(spec.transition))


def _sample_into(spec: ChainSpec, generator: np.random.Generator, hidden: np.ndarray,
                 observations: np.ndarray | None, cumulative: tuple[np.ndarray, np.ndarray, np.ndarray | None]):
    cumulative_initial, cumulative_transition, cumulative_emission = cumulative
    n = hidden.shape[0]
    walk_chain(cumulative_initial, cumulative_transition, generator.random(n), hidden)
    if cumulative_emission is not None:
        emit_symbols(cumulative_emission, hidden, generator.random(n), observations)


def trajectory_sampler(spec: ChainSpec):
    """
    precompute the cumulative tables of `spec` once; the returned callable fills one trajectory
    from a generator and returns the observation array
    """
    cumulative = (
        cumulative_columns(spec.initial.probs)[0],
        cumulative_columns(spec.transition.entries),
        None if spec.emission is None else cumulative_columns(spec.emission.entries),
    )

    def _sample(generator: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        hidden = np.empty(n, dtype=np.int64)
        observations = hidden if spec.emission is None else np.empty(n, dtype=np.int64)
        _sample_into(spec, generator, hidden, None if spec.emission is None else observations, cumulative)
        return hidden, observations

    return _sample


def sample_trajectory(spec: ChainSpec, n: int, seed: int, *, keep_hidden: bool = False) -> Trajectory:
    """
    draw `X_1 ~ p1`, `X_(i+1) ~ A(. | X_i)`, `Y_i ~ B(. | X_i)`

    bit-reproducible given `(spec, n, seed)`: the stream is PCG64DXSM keyed by `SeedSequence(seed)`,
    the first `n` uniforms drive the hidden walk and the next `n` the emissions
    """
    if n < 1:
        raise ValueError(f'trajectory length must be positive, but got `{n}`')

    hidden, observations = trajectory_sampler(spec)(rng.stream(seed), n)
    return Trajectory(
        observations=observations,
        symbol_count=spec.symbol_count,
        hidden_states=hidden if keep_hidden else None,
        state_count=spec.state_count if keep_hidden else None,
    )


def enumeration_guard(what: str, size: int, limit: int | None = None):
    limit = config.guards.enumeration_limit if limit is None else limit
    if size > limit:
        raise EnumerationLimitError(what, size, limit)


def joint_law_tensor(spec: ChainSpec, n: int, *, observed: bool = True) -> np.ndarray:
    """
    the law of `(X_1..X_n)` (or of `(Y_1..Y_n)` when `observed`) as a dense tensor with one axis per step

    `P(x) = p1(x_1) prod A(x_(i+1) | x_i)`, and `L(Y) = sum_x P(x) prod B(y_i | x_i)`
    """
    if n < 1:
        raise ValueError(f'trajectory length must be positive, but got `{n}`')
    k, m = spec.state_count, spec.symbol_count
    enumeration_guard(f'the hidden law of length {n}', k ** n)

    law = spec.initial.probs.copy()
    transition_rows = spec.transition.entries.T  # [x_prev, x_next]
    for _ in range(n - 1):
        law = law[..., :, None] * transition_rows[(None,) * (law.ndim - 1)]

    if not observed or spec.emission is None:
        return law

    enumeration_guard(f'the observation law of length {n}', m ** n)
    emission_rows = spec.emission.entries.T  # [x, y]
    for axis in range(n):
        law = np.moveaxis(np.tensordot(law, emission_rows, axes=([axis], [0])), -1, axis)
    return law


def exact_joint_law(spec: ChainSpec, n: int, *, observed: bool = True) -> dict[tuple[int, ...], float]:
    """
    exact law of all length-`n` trajectories, the ground truth oracle of the other modules
    """
    law = joint_law_tensor(spec, n, observed=observed)
    return {index: float(law[index]) for index in np.ndindex(*law.shape)}
