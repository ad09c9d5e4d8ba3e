from pathlib import Path
from typing import Literal
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import OutputFormat

__all__ = (
    'Command',
    'RunConfig',
)

Command = Literal['mixing', 'bounds', 'simulate', 'verify']


class RunConfig(BaseModel):
    """
    everything one command needs, after the command line has been merged over `config.run`
    """
    model_config = ConfigDict(frozen=True)

    command: Command
    spec_path: Path | None = None
    n: int
    trials: int
    seed: int
    epsilon_grid: tuple[float, ...]
    horizon: int
    output_format: OutputFormat
    stationary: bool = True
    statistic: Literal['sup', 'tv'] = 'sup'
    workers: int = 1
    limit: int
    instances: int = Field(ge=0)
    pairs: int

    @model_validator(mode='after')
    def verify_fields(self):
        ATTR_NAMES = ('n', 'trials', 'workers', 'limit', 'pairs')
        for _attr in ATTR_NAMES:
            _attr_value = getattr(self, _attr)
            assert _attr_value >= 1, f'`{_attr}` must be positive, but got `{_attr_value}`'
        assert self.horizon >= 2, f'`horizon` must be at least 2, but got `{self.horizon}`'
        assert all(eps > 0 for eps in self.epsilon_grid), '`epsilon_grid` must only contain positive values'

        if self.command in ('mixing', 'bounds', 'simulate'):
            assert self.spec_path is not None, f'`{self.command}` needs a chain spec (--spec)'
        if self.command in ('bounds', 'simulate'):
            assert self.epsilon_grid, '`epsilon_grid` must not be empty'
        return self
