"""
Closed-form concentration inequalities for geometrically ergodic Markov and hidden Markov chains.

`epsilon` is always the per-coordinate scale: a bound on `P(f - E f > n * epsilon)` for a Hamming
1-Lipschitz `f`, equivalently on `P(f / n - E f / n > epsilon)`. Use `epsilon_from_deviation` to convert an
absolute deviation `t = n * epsilon`.

All probability bounds come back as `TailBound` (raw value plus the value capped at 1).
"""
import math
import numpy as np

from .chain_core import tv_distance, _probs
from .structs.chain import StochasticVector
from .structs.mixing import ErgodicityConstants
from .structs.bounds import BoundQuery, TailBound, DeviationBound, LambdaBreakdown

__all__ = (
    'master_bound',
    'hmm_concentration_bound',
    'contraction_concentration_bound',
    'gamma_n',
    'dkw_bound',
    'naive_union_bound',
    'lambda_n',
    'uniform_chernoff_bound',
    'variance_bound',
    'expectation_sup_bound',
    'empirical_mean_drift_bound',
    'nonstationary_correction',
    'burn_in_steps',
    'epsilon_from_deviation',
)


def _check_n(n: int):
    if n < 1:
        raise ValueError(f'n must be positive, but got `{n}`')


def _ergodic_exponent(constants: ErgodicityConstants, n: int, epsilon: float, lipschitz_constant: float = 1.0) -> float:
    return n * (1.0 - constants.theta) ** 2 * epsilon ** 2 / (2.0 * constants.G ** 2 * lipschitz_constant ** 2)


def master_bound(delta_inf: float, delta_2: float, n: int, epsilon: float) -> TailBound:
    """
    `2 exp(-2 n eps^2 / min(||Delta||_2, ||Delta||_inf)^2)`, two-tailed, for Hamming 1-Lipschitz `f`
    """
    _check_n(n)
    if delta_inf < 1 or delta_2 < 1:
        raise ValueError(f'Delta norms are at least 1, but got {delta_inf} and {delta_2}')
    norm = min(delta_inf, delta_2)
    return TailBound(raw=2.0 * math.exp(-2.0 * n * epsilon ** 2 / norm ** 2))


def hmm_concentration_bound(q: BoundQuery, *, two_tailed: bool = False) -> TailBound:
    """
    `P(f - E f > n eps) <= exp(-n (1-theta)^2 eps^2 / (2 G^2))` for `Lip(f) <= 1` and any start law,
    the other tail alike; a Lipschitz constant `L` scales `G` to `L G`

    the DKW-type and the uniform Chernoff bounds consume the one-tailed value
    """
    raw = math.exp(-_ergodic_exponent(q.constants, q.n, q.epsilon, q.lipschitz_constant))
    return TailBound(raw=2.0 * raw if two_tailed else raw)


def contraction_concentration_bound(kappa: float, n: int, epsilon: float) -> TailBound:
    """
    the older contraction bound `2 exp(-2 (1-kappa)^2 n eps^2)`, vacuous unless `kappa < 1`
    """
    _check_n(n)
    if not 0 <= kappa <= 1:
        raise ValueError(f'kappa must be in [0, 1], but got `{kappa}`')
    return TailBound(raw=2.0 * math.exp(-2.0 * (1.0 - kappa) ** 2 * n * epsilon ** 2))


def gamma_n(constants: ErgodicityConstants, n: int) -> float:
    """
    `1/2 sqrt((1 + 2 G theta) / (n (1 - theta)))`
    """
    _check_n(n)
    return 0.5 * math.sqrt((1.0 + 2.0 * constants.G * constants.theta) / (n * (1.0 - constants.theta)))


def expectation_sup_bound(constants: ErgodicityConstants, n: int) -> float:
    """
    `E ||rho - rho_hat||_inf <= sqrt((1 + 2 G theta) / (n (1 - theta)))` (the l2 norm obeys it too)
    """
    return 2.0 * gamma_n(constants, n)


def dkw_bound(constants: ErgodicityConstants, n: int, epsilon: float) -> DeviationBound:
    """
    `P(||rho - rho_hat||_inf > threshold + eps) <= tail` for a stationary chain
    """
    if epsilon <= 0:
        raise ValueError(f'epsilon must be positive, but got `{epsilon}`')
    return DeviationBound(
        threshold=expectation_sup_bound(constants, n),
        tail=hmm_concentration_bound(BoundQuery(n=n, epsilon=epsilon, constants=constants)),
    )


def naive_union_bound(rho: StochasticVector, constants: ErgodicityConstants, n: int, epsilon: float) -> TailBound:
    """
    `hmm_concentration_bound` per symbol plus a union bound:
    `P(||rho - rho_hat||_inf > eps) <= 2 |supp rho| tail`
    """
    support = int(np.count_nonzero(_probs(rho)))
    tail = hmm_concentration_bound(BoundQuery(n=n, epsilon=epsilon, constants=constants))
    return TailBound(raw=2.0 * support * tail.raw)


def lambda_n(rho: StochasticVector, constants: ErgodicityConstants, n: int) -> LambdaBreakdown:
    """
    `Lambda_n(rho) = gamma_n sum_heavy sqrt(rho_y) + min(gamma_n sum_light sqrt(rho_y), sum_light rho_y)`

    heavy atoms have `rho_y >= 1/n`, light atoms `rho_y < 1/n`
    """
    gamma = gamma_n(constants, n)
    probs = _probs(rho)
    heavy = probs >= 1.0 / n
    light = ~heavy

    heavy_sqrt_sum = float(np.sqrt(probs[heavy]).sum())
    light_sqrt_sum = float(np.sqrt(probs[light]).sum())
    light_mass_sum = float(probs[light].sum())
    heavy_sum = gamma * heavy_sqrt_sum
    return LambdaBreakdown(
        gamma_n=gamma,
        heavy_sqrt_sum=heavy_sqrt_sum,
        heavy_sum=heavy_sum,
        light_sqrt_sum=light_sqrt_sum,
        light_mass_sum=light_mass_sum,
        lambda_=heavy_sum + min(gamma * light_sqrt_sum, light_mass_sum),
    )


def uniform_chernoff_bound(
        rho: StochasticVector, constants: ErgodicityConstants, n: int, epsilon: float
) -> DeviationBound:
    """
    uniform Chernoff bound: `P(sup_E |rho(E) - rho_hat(E)| > Lambda_n + eps) <= tail`, stationary chain
    """
    if epsilon <= 0:
        raise ValueError(f'epsilon must be positive, but got `{epsilon}`')
    return DeviationBound(
        threshold=lambda_n(rho, constants, n).lambda_,
        tail=hmm_concentration_bound(BoundQuery(n=n, epsilon=epsilon, constants=constants)),
    )


def variance_bound(rho_y: float, constants: ErgodicityConstants, n: int) -> float:
    """
    `Var[rho_hat_y] <= rho_y (1 + 2 G theta) / (n (1 - theta))`
    """
    if not 0 <= rho_y <= 1:
        raise ValueError(f'rho_y must be in [0, 1], but got `{rho_y}`')
    return 4.0 * gamma_n(constants, n) ** 2 * rho_y


def empirical_mean_drift_bound(constants: ErgodicityConstants, n: int) -> float:
    """
    `TV(E rho_hat - rho) <= G / ((1 - theta) n)` from any start
    """
    _check_n(n)
    return constants.G / ((1.0 - constants.theta) * n)


def nonstationary_correction(pi: StochasticVector, pi_prime: StochasticVector) -> float:
    """
    `TV(pi - pi')`, the additive correction of the DKW-type and uniform Chernoff bounds when the hidden
    chain starts from `pi'` instead of `pi`
    """
    return tv_distance(pi, pi_prime)


def burn_in_steps(constants: ErgodicityConstants, target: float) -> int:
    """
    the smallest `s >= 0` with `G theta^s <= target`; running `s` steps first makes the start that close
    """
    if target <= 0:
        raise ValueError(f'target must be positive, but got `{target}`')
    G, theta = constants.G, constants.theta
    if G <= target:
        return 0
    if theta == 0.0:
        return 1

    steps = max(1, math.ceil(math.log(target / G) / math.log(theta)))
    # 对数的舍入误差最多差一步
    if G * theta ** steps > target:
        steps += 1
    elif steps > 1 and G * theta ** (steps - 1) <= target:
        steps -= 1
    return steps


def epsilon_from_deviation(t: float, n: int) -> float:
    """
    per-coordinate `epsilon` of an absolute deviation `t = n * epsilon`
    """
    _check_n(n)
    return t / n
