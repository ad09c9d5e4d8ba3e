from typing import Any
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .chain import ArrayModel

__all__ = (
    'TAU_TOLERANCE',
    'ErgodicityConstants',
    'DeltaMatrix',
)

TAU_TOLERANCE = 1e-12


class ErgodicityConstants(BaseModel):
    """
    `(G, theta)` with `tau_s <= G * theta^(s-1)`; `tau_table[s-1]` is the evidence `tau_s`, s = 1..horizon
    """
    model_config = ConfigDict(frozen=True)

    G: float = Field(ge=1.0)
    theta: float = Field(ge=0.0, lt=1.0)
    tau_table: tuple[float, ...] = ()
    horizon: int = Field(default=0, ge=0)
    horizon_too_short: bool = Field(
        default=False, description='tau at the horizon is not below half of tau_1, the fit is not trustworthy'
    )

    @model_validator(mode='after')
    def verify_fields(self):
        assert len(self.tau_table) == self.horizon, \
            f'`tau_table` has {len(self.tau_table)} entries, expect horizon = {self.horizon}'
        for s, tau in enumerate(self.tau_table, start=1):
            envelope = self.envelope(s)
            assert tau <= envelope + TAU_TOLERANCE, \
                f'tau_{s} = {tau!r} exceeds G * theta^(s-1) = {envelope!r}'
        return self

    @classmethod
    def assumed(cls, G: float, theta: float) -> 'ErgodicityConstants':
        """
        constants given by hand, without `tau` evidence
        """
        return cls(G=G, theta=theta)

    def envelope(self, s: int) -> float:
        """
        `G * theta^(s-1)`, with `0^0 = 1`
        """
        return self.G * self.theta ** (s - 1)  # python 的 0.0 ** 0 == 1.0


class DeltaMatrix(ArrayModel):
    """
    upper-triangular `n x n` matrix, unit diagonal, entry `(i, j)` is (a bound on) `eta_bar_ij`
    """
    entries: np.ndarray

    @field_validator('entries', mode='before')
    @classmethod
    def _validate_entries(cls, value: Any) -> np.ndarray:
        entries = np.array(value, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.size == 0:
            raise ValueError(f'Delta must be a non-empty square matrix, but got shape {entries.shape}')
        if not np.array_equal(np.diag(entries), np.ones(entries.shape[0])):
            raise ValueError('Delta must have a unit diagonal')
        if np.tril(entries, -1).any():
            raise ValueError('Delta must be zero below the diagonal')
        if (entries < 0).any() or (entries > 1).any():
            raise ValueError('Delta entries must be in [0, 1]')
        entries.setflags(write=False)
        return entries

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])
