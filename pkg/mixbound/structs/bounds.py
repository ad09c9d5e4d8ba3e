from pydantic import BaseModel, ConfigDict, Field, computed_field

from .mixing import ErgodicityConstants

__all__ = (
    'BoundQuery',
    'TailBound',
    'DeviationBound',
    'LambdaBreakdown',
)


class BoundQuery(BaseModel):
    """
    a concentration question: how likely does a Lipschitz `f` of `n` steps exceed its mean by `n * epsilon`
    """
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    epsilon: float = Field(gt=0)
    constants: ErgodicityConstants
    lipschitz_constant: float = Field(default=1.0, gt=0)


class TailBound(BaseModel):
    """
    a probability bound, `value` is `raw` capped at 1
    """
    model_config = ConfigDict(frozen=True)

    raw: float = Field(ge=0)

    @computed_field
    @property
    def value(self) -> float:
        return min(1.0, self.raw)

    def __float__(self) -> float:
        return self.value


class DeviationBound(BaseModel):
    """
    `P(statistic > threshold + epsilon) <= tail`
    """
    model_config = ConfigDict(frozen=True)

    threshold: float = Field(ge=0)
    tail: TailBound


class LambdaBreakdown(BaseModel):
    """
    the pieces of `Lambda_n(rho)`; atoms with `rho_y >= 1/n` are heavy, the rest are light
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    gamma_n: float = Field(ge=0)
    heavy_sqrt_sum: float = Field(ge=0)
    heavy_sum: float = Field(ge=0, description='gamma_n * heavy_sqrt_sum')
    light_sqrt_sum: float = Field(ge=0)
    light_mass_sum: float = Field(ge=0)
    lambda_: float = Field(ge=0, alias='lambda')

    @property
    def light_part(self) -> float:
        return min(self.gamma_n * self.light_sqrt_sum, self.light_mass_sum)

    @property
    def value(self) -> float:
        return self.lambda_
