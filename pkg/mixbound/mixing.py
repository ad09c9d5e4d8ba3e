"""
Contraction coefficients, inverse mixing times, fitted geometric-ergodicity constants, brute-force
eta-mixing coefficients and the Delta matrix with its operator norms.
"""
import math
import numpy as np
from scipy.spatial.distance import pdist

from .log import logger
from .shared import config
from .chain_core import tv_distance, stationary_distribution, joint_law_tensor, _entries, _probs
from .structs.chain import StochasticVector, StochasticMatrix, ChainSpec
from .structs.mixing import ErgodicityConstants, DeltaMatrix
from .structs.exceptions import ConvergenceError

__all__ = (
    'contraction_coefficient',
    'verify_contraction',
    'power_kernel',
    'tau_table',
    'inverse_mixing_time',
    'fit_ergodicity',
    'eta_bar_exact',
    'delta_matrix',
    'delta_matrix_exact',
    'delta_inf_norm',
    'delta_1_norm',
    'delta_2_norm',
    'contraction_bound_inf_norm',
)

mixing_logger = logger.bind(name='mixing')


def contraction_coefficient(a: StochasticMatrix | np.ndarray) -> float:
    """
    Doblin contraction coefficient, the largest TV distance between two columns (exact over all pairs)
    """
    columns = _entries(a).T
    if columns.shape[0] < 2:
        return 0.0
    return min(1.0, 0.5 * float(pdist(columns, 'cityblock').max()))


def verify_contraction(a: StochasticMatrix, p: StochasticVector, q: StochasticVector) -> tuple[float, float]:
    """
    :return: `(TV(Ap, Aq), kappa(A) * TV(p, q))`, the first never exceeds the second
    """
    entries = _entries(a)
    lhs = tv_distance(entries @ _probs(p), entries @ _probs(q))
    rhs = contraction_coefficient(entries) * tv_distance(p, q)
    return lhs, rhs


def power_kernel(a: StochasticMatrix, m: int) -> StochasticMatrix:
    """
    the `m`-step kernel `A^m`, `m >= 1`
    """
    if m < 1:
        raise ValueError(f'the power must be positive, but got `{m}`')
    entries = _entries(a)
    power = entries
    for _ in range(m - 1):
        power = entries @ power
    return StochasticMatrix(power)


def tau_table(a: StochasticMatrix, horizon: int) -> list[float]:
    """
    `[tau_1, ..., tau_horizon]` with `tau_s = max_x TV(A^(s-1) delta_x, pi)`
    """
    if horizon < 1:
        raise ValueError(f'horizon must be positive, but got `{horizon}`')

    pi = stationary_distribution(a).probs
    entries = _entries(a)
    laws = np.eye(entries.shape[0])  # column x = L(X_s | X_1 = x)
    taus = []
    for _ in range(horizon):
        taus.append(min(1.0, 0.5 * float(np.abs(laws - pi[:, None]).sum(axis=0).max())))
        laws = entries @ laws
    return taus


def inverse_mixing_time(a: StochasticMatrix, s: int) -> float:
    """
    `tau_s`, the worst-case TV distance between the `s`-step law and the stationary law
    """
    if s < 1:
        raise ValueError(f'the step index starts at 1, but got `{s}`')
    return tau_table(a, s)[-1]


def _envelope_constant(taus: list[float], theta: float, noise_floor: float) -> float:
    """
    the smallest `G` with `tau_s <= G * theta^(s-1)` over the tabulated `tau_s` above the noise floor
    """
    G = 0.0
    for s, tau in enumerate(taus, start=1):
        if tau <= noise_floor:
            continue
        scale = theta ** (s - 1)
        if scale == 0.0:
            return math.inf
        G = max(G, tau / scale)
    return G


def fit_ergodicity(a: StochasticMatrix, horizon: int | None = None) -> ErgodicityConstants:
    """
    fit `(G, theta)` with `tau_s <= G * theta^(s-1)` for `s = 1..horizon`

    `theta` is the largest ratio `tau_(s+1) / tau_s` above the noise floor; telescoping the ratios gives
    `tau_s <= tau_1 theta^(s-1)`, so `G = max(1, G(theta))` is finite whenever `theta < 1`

    :raise NotErgodicError: the kernel is reducible or periodic
    """
    horizon = config.run.horizon if horizon is None else horizon
    if horizon < 2:
        raise ValueError(f'horizon must be at least 2, but got `{horizon}`')

    noise_floor = config.guards.tau_noise_floor
    taus = tau_table(a, horizon)
    # a tau_(s+1) under the floor is an exact zero, not a ratio of rounding errors
    ratios = [
        taus[s + 1] / taus[s] if taus[s + 1] > noise_floor else 0.0
        for s in range(horizon - 1) if taus[s] > noise_floor
    ]
    theta = max(ratios, default=0.0)
    if theta < 1.0:
        G = _envelope_constant(taus, theta, noise_floor)
    else:
        # tau did not decrease inside the horizon
        theta = 1.0 - 2.0 ** -20
        G = _envelope_constant(taus, theta, noise_floor)
        mixing_logger.warning('tau_s does not decay within the horizon {}, theta pinned to {}', horizon, theta)

    horizon_too_short = taus[-1] > noise_floor and not taus[-1] < 0.5 * taus[0]
    if horizon_too_short:
        mixing_logger.warning(
            'tau_{} = {:.3e} is not below half of tau_1 = {:.3e}, horizon {} is too short for a trustworthy fit',
            horizon, taus[-1], taus[0], horizon
        )

    constants = ErgodicityConstants(
        G=max(1.0, G), theta=theta, tau_table=tuple(taus), horizon=horizon, horizon_too_short=horizon_too_short
    )
    mixing_logger.debug('fitted G = {}, theta = {} over horizon {}', constants.G, constants.theta, horizon)
    return constants


def _eta_bar_from_law(law: np.ndarray, i: int, j: int) -> float:
    n, m = law.ndim, law.shape[0]
    if j - i > 1:
        # 对 i+1 .. j-1 位置求和
        law = law.sum(axis=tuple(range(i, j - 1)))
    law = law.reshape(m ** (i - 1), m, m ** (n - j + 1))

    best = 0.0
    for prefix in law:
        mass = prefix.sum(axis=1)
        realizable = mass > 0
        if realizable.sum() < 2:
            continue
        conditionals = prefix[realizable] / mass[realizable, None]
        best = max(best, 0.5 * float(pdist(conditionals, 'cityblock').max()))
    return min(best, 1.0)


def _check_pair(n: int, i: int, j: int):
    if not 1 <= i < j <= n:
        raise ValueError(f'expect 1 <= i < j <= n, but got i = {i}, j = {j}, n = {n}')


def eta_bar_exact(spec: ChainSpec, n: int, i: int, j: int) -> float:
    """
    brute-force `eta_bar_ij`: the largest TV distance between the laws of `(Y_j..Y_n)` conditioned on two
    histories `(y, w)` and `(y, w')` of length `i`, over realizable histories only
    """
    _check_pair(n, i, j)
    return _eta_bar_from_law(joint_law_tensor(spec, n), i, j)


def delta_matrix(constants: ErgodicityConstants, n: int) -> DeltaMatrix:
    """
    the Delta bound `min(1, 2 G theta^(j-i))` above the diagonal
    """
    if n < 1:
        raise ValueError(f'n must be positive, but got `{n}`')
    lag = np.subtract.outer(np.arange(n), np.arange(n)).T  # lag[i, j] = j - i
    entries = np.zeros((n, n))
    upper = lag > 0
    entries[upper] = np.minimum(1.0, 2.0 * constants.G * constants.theta ** lag[upper].astype(np.float64))
    np.fill_diagonal(entries, 1.0)
    return DeltaMatrix(entries=entries)


def delta_matrix_exact(spec: ChainSpec, n: int) -> DeltaMatrix:
    """
    the true Delta of a tiny chain, every entry from `eta_bar_exact`
    """
    law = joint_law_tensor(spec, n)
    entries = np.eye(n)
    for i in range(1, n):
        for j in range(i + 1, n + 1):
            entries[i - 1, j - 1] = _eta_bar_from_law(law, i, j)
    return DeltaMatrix(entries=entries)


def delta_inf_norm(d: DeltaMatrix) -> float:
    """
    max row sum, `1 + max_i sum_(j>i) eta_bar_ij`
    """
    return float(np.abs(d.entries).sum(axis=1).max())


def delta_1_norm(d: DeltaMatrix) -> float:
    return float(np.abs(d.entries).sum(axis=0).max())


def delta_2_norm(d: DeltaMatrix) -> float:
    """
    largest singular value, by power iteration on `Delta^T Delta` from the all-ones vector

    :raise ConvergenceError: the iteration cap is reached first
    """
    tolerance = config.guards.power_iteration_tolerance
    max_iter = config.guards.power_iteration_max_iter

    gram = d.entries.T @ d.entries
    vector = np.full(d.n, 1.0 / math.sqrt(d.n))
    eigenvalue = 0.0
    for _ in range(max_iter):
        image = gram @ vector
        estimate = float(np.linalg.norm(image))
        vector = image / estimate
        if abs(estimate - eigenvalue) <= tolerance * estimate:
            return max(1.0, math.sqrt(estimate))
        eigenvalue = estimate

    raise ConvergenceError(f'power iteration for ||Delta||_2 did not converge in {max_iter} iterations')


def contraction_bound_inf_norm(constants: ErgodicityConstants) -> float:
    """
    `2G / (1 - theta)`, the closed-form cap on `||Delta||_inf` for any `n`
    """
    return 2.0 * constants.G / (1.0 - constants.theta)
