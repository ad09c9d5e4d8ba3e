from typing import Any, Literal, ClassVar
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import APP_VERSION
from .chain import ArrayModel
from .bounds import LambdaBreakdown
from .mixing import ErgodicityConstants

__all__ = (
    'StatisticName',
    'EmpiricalDistribution',
    'BaseReport',
    'DeviationRow',
    'DeviationReport',
    'ExpectationEstimate',
    'LipschitzAudit',
    'LemmaCheck',
    'LemmaSuiteReport',
    'MixingReport',
    'BoundsRow',
    'BoundsReport',
    'VerifyReport',
)

StatisticName = Literal['sup_norm', 'total_variation', 'custom_lipschitz']


class EmpiricalDistribution(ArrayModel):
    """
    per-symbol occupation counts of a trajectory, `counts[y] = sum_i 1{Y_i = y}`
    """
    counts: np.ndarray

    @field_validator('counts', mode='before')
    @classmethod
    def _validate_counts(cls, value: Any) -> np.ndarray:
        counts = np.array(value, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError(f'counts must be a non-empty 1-d sequence, but got shape {counts.shape}')
        if (counts < 0).any():
            raise ValueError('counts must be nonnegative')
        if counts.sum() < 1:
            raise ValueError('counts must come from a non-empty trajectory')
        counts.setflags(write=False)
        return counts

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.n

    def merge(self, other: 'EmpiricalDistribution') -> 'EmpiricalDistribution':
        """
        the empirical distribution of the two trajectories concatenated
        """
        size = max(self.counts.size, other.counts.size)
        merged = np.zeros(size, dtype=np.int64)
        merged[:self.counts.size] += self.counts
        merged[:other.counts.size] += other.counts
        return EmpiricalDistribution(counts=merged)


class BaseReport(BaseModel):
    """
    base of every command report; `CSV_COLUMNS` is frozen per report type
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    CSV_COLUMNS: ClassVar[tuple[str, ...]] = ()

    kind: str
    version: str = APP_VERSION

    @property
    def passed(self) -> bool:
        return True

    def csv_rows(self) -> list[dict[str, Any]]:
        return []


class DeviationRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: float
    threshold: float
    empirical_frequency: float = Field(ge=0, le=1)
    mc_halfwidth: float = Field(ge=0)
    bound: float = Field(ge=0)
    satisfied: bool

    @model_validator(mode='after')
    def verify_fields(self):
        assert self.satisfied == (self.empirical_frequency - self.mc_halfwidth <= self.bound), \
            '`satisfied` must equal `empirical_frequency - mc_halfwidth <= bound`'
        return self


class DeviationReport(BaseReport):
    CSV_COLUMNS: ClassVar[tuple[str, ...]] = (
        'epsilon', 'threshold', 'empirical_frequency', 'mc_halfwidth', 'bound', 'satisfied'
    )

    kind: Literal['deviation'] = 'deviation'
    spec_id: str
    n: int = Field(ge=1)
    trials: int = Field(ge=1)
    seed: int
    statistic_name: StatisticName
    delta_mc: float = Field(gt=0, lt=1)
    stationary: bool = True
    correction: float = Field(default=0.0, ge=0, description='TV(pi, pi\') added to every bound when nonstationary')
    lipschitz_constant: float = Field(default=1.0, gt=0)
    constants: ErgodicityConstants
    rows: tuple[DeviationRow, ...]
    expectation: 'ExpectationEstimate | None' = None

    @property
    def passed(self) -> bool:
        return all(row.satisfied for row in self.rows)

    def csv_rows(self) -> list[dict[str, Any]]:
        return [row.model_dump() for row in self.rows]


class ExpectationEstimate(BaseModel):
    """
    Monte Carlo mean of a statistic with its 3-sigma half-width, next to the bound on its expectation
    """
    model_config = ConfigDict(frozen=True)

    statistic_name: StatisticName
    estimate: float
    halfwidth: float = Field(ge=0)
    bound: float = Field(ge=0)

    @property
    def satisfied(self) -> bool:
        return self.estimate - self.halfwidth <= self.bound


class LipschitzAudit(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    pairs: int
    perturbations: int
    seed: int
    max_g_ratio: float
    max_h_ratio: float

    @property
    def passed(self) -> bool:
        return self.max_g_ratio <= 1.0 and self.max_h_ratio <= 2.0


class LemmaCheck(BaseModel):
    """
    one inequality (or identity) checked over every instance of the suite
    """
    model_config = ConfigDict(frozen=True)

    name: str
    statement: str
    checked: int = 0
    worst_gap: float = Field(description='max of lhs - rhs, or of |lhs - rhs| for identities')
    tolerance: float
    failing_instances: tuple[str, ...] = Field(
        default=(), description='`seed=<n>` or `corner:<name>` of every violating instance'
    )

    @property
    def passed(self) -> bool:
        return not self.failing_instances


class LemmaSuiteReport(BaseReport):
    CSV_COLUMNS: ClassVar[tuple[str, ...]] = (
        'name', 'checked', 'worst_gap', 'tolerance', 'passed', 'failing_instances'
    )

    kind: Literal['lemma_suite'] = 'lemma_suite'
    seed: int
    instances: int
    limit: int
    checks: tuple[LemmaCheck, ...]
    equality_observations: int = Field(
        default=0, description='eta_bar_ij values equal to kappa(A^(j-i)) within 1e-12 on Markov instances'
    )

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def csv_rows(self) -> list[dict[str, Any]]:
        return [
            {
                'name': check.name, 'checked': check.checked, 'worst_gap': check.worst_gap,
                'tolerance': check.tolerance, 'passed': check.passed,
                'failing_instances': ' '.join(check.failing_instances),
            }
            for check in self.checks
        ]


class VerifyReport(BaseReport):
    CSV_COLUMNS: ClassVar[tuple[str, ...]] = LemmaSuiteReport.CSV_COLUMNS

    kind: Literal['verify'] = 'verify'
    suite: LemmaSuiteReport
    audit: LipschitzAudit

    @property
    def passed(self) -> bool:
        return self.suite.passed and self.audit.passed

    def csv_rows(self) -> list[dict[str, Any]]:
        audit_rows = [
            {
                'name': 'lipschitz_g', 'checked': self.audit.pairs + self.audit.perturbations,
                'worst_gap': self.audit.max_g_ratio - 1.0, 'tolerance': 0.0,
                'passed': self.audit.max_g_ratio <= 1.0, 'failing_instances': '',
            },
            {
                'name': 'lipschitz_h', 'checked': self.audit.pairs + self.audit.perturbations,
                'worst_gap': self.audit.max_h_ratio - 2.0, 'tolerance': 0.0,
                'passed': self.audit.max_h_ratio <= 2.0, 'failing_instances': '',
            },
        ]
        return self.suite.csv_rows() + audit_rows


class MixingReport(BaseReport):
    CSV_COLUMNS: ClassVar[tuple[str, ...]] = ('s', 'tau', 'envelope')

    kind: Literal['mixing'] = 'mixing'
    spec_id: str
    n: int
    kappa: float
    stationary: tuple[float, ...]
    constants: ErgodicityConstants
    delta_inf: float
    delta_2: float
    delta_inf_cap: float = Field(description='2G / (1 - theta)')

    def csv_rows(self) -> list[dict[str, Any]]:
        return [
            {'s': s, 'tau': tau, 'envelope': self.constants.envelope(s)}
            for s, tau in enumerate(self.constants.tau_table, start=1)
        ]


class BoundsRow(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    epsilon: float
    hmm_tail: float
    hmm_tail_two_sided: float
    dkw_threshold: float
    dkw_tail: float
    naive_union_tail: float
    lambda_breakdown: LambdaBreakdown
    chernoff_threshold: float
    chernoff_tail: float
    master_tail: float
    nonstationary_correction: float = 0.0


class BoundsReport(BaseReport):
    CSV_COLUMNS: ClassVar[tuple[str, ...]] = (
        'epsilon', 'hmm_tail', 'hmm_tail_two_sided', 'dkw_threshold', 'dkw_tail', 'naive_union_tail',
        'gamma_n', 'lambda_heavy', 'lambda_light_sqrt', 'lambda_light_mass', 'lambda',
        'chernoff_threshold', 'chernoff_tail', 'master_tail', 'nonstationary_correction',
    )

    kind: Literal['bounds'] = 'bounds'
    spec_id: str
    n: int
    stationary: bool
    constants: ErgodicityConstants
    delta_inf: float
    delta_2: float
    rows: tuple[BoundsRow, ...]

    def csv_rows(self) -> list[dict[str, Any]]:
        return [
            {
                'epsilon': row.epsilon, 'hmm_tail': row.hmm_tail, 'hmm_tail_two_sided': row.hmm_tail_two_sided,
                'dkw_threshold': row.dkw_threshold, 'dkw_tail': row.dkw_tail,
                'naive_union_tail': row.naive_union_tail,
                'gamma_n': row.lambda_breakdown.gamma_n, 'lambda_heavy': row.lambda_breakdown.heavy_sum,
                'lambda_light_sqrt': row.lambda_breakdown.light_sqrt_sum,
                'lambda_light_mass': row.lambda_breakdown.light_mass_sum,
                'lambda': row.lambda_breakdown.lambda_,
                'chernoff_threshold': row.chernoff_threshold, 'chernoff_tail': row.chernoff_tail,
                'master_tail': row.master_tail, 'nonstationary_correction': row.nonstationary_correction,
            }
            for row in self.rows
        ]


DeviationReport.model_rebuild()
