from typing import Any, Sequence
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from ..shared import config

__all__ = (
    'ArrayModel',
    'StochasticVector',
    'StochasticMatrix',
    'ChainSpec',
    'Trajectory',
)


def _frozen_array(value: Any, dtype) -> np.ndarray:
    array = np.array(value, dtype=dtype)  # always a copy, the caller may keep mutating its own array
    array.setflags(write=False)
    return array


class ArrayModel(BaseModel):
    """
    immutable pydantic model holding numpy arrays

    pydantic compares and hashes the field dict, which is ambiguous for arrays, so both are redone here
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def _key(self) -> tuple:
        return tuple(
            (name, value.shape, value.tobytes()) if isinstance(value, np.ndarray) else (name, value)
            for name, value in self.__dict__.items()
        )

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._key()))


class StochasticVector(ArrayModel):
    """
    a probability distribution over the states `0..k-1`
    """
    probs: np.ndarray

    def __init__(self, probs: Sequence[float] | np.ndarray | None = None, /, **kwargs):
        if probs is not None:
            kwargs['probs'] = probs
        super().__init__(**kwargs)

    @field_validator('probs', mode='before')
    @classmethod
    def _validate_probs(cls, value: Any) -> np.ndarray:
        probs = np.array(value, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError(f'a stochastic vector must be a non-empty 1-d sequence, but got shape {probs.shape}')
        if not np.isfinite(probs).all():
            raise ValueError('a stochastic vector must only contain finite values')

        negative = np.flatnonzero(probs < 0)
        if negative.size:
            raise ValueError(f'entry {negative[0]} is negative ({probs[negative[0]]!r})')

        total = float(probs.sum())
        if abs(total - 1.0) > config.guards.stochastic_tolerance:
            raise ValueError(f'entries sum to {total!r} (deviation {total - 1.0:+.3e})')
        return _frozen_array(probs / total, np.float64)

    @classmethod
    def point_mass(cls, size: int, state: int) -> 'StochasticVector':
        probs = np.zeros(size)
        probs[state] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, size: int) -> 'StochasticVector':
        return cls(np.full(size, 1.0 / size))

    @property
    def size(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, item):
        return self.probs[item]


class StochasticMatrix(ArrayModel):
    """
    a column-stochastic kernel, `entries[x_next, x]` is the probability of `x_next` given `x`

    transition kernels are square (k x k), emission kernels are m x k
    """
    entries: np.ndarray

    def __init__(self, entries: Sequence[Sequence[float]] | np.ndarray | None = None, /, **kwargs):
        if entries is not None:
            kwargs['entries'] = entries
        super().__init__(**kwargs)

    @field_validator('entries', mode='before')
    @classmethod
    def _validate_entries(cls, value: Any) -> np.ndarray:
        entries = np.array(value, dtype=np.float64)
        if entries.ndim != 2 or entries.size == 0:
            raise ValueError(f'a stochastic matrix must be a non-empty 2-d array, but got shape {entries.shape}')
        if not np.isfinite(entries).all():
            raise ValueError('a stochastic matrix must only contain finite values')

        negative = np.argwhere(entries < 0)
        if negative.size:
            row, column = negative[0]
            raise ValueError(f'entry ({row}, {column}) is negative ({entries[row, column]!r})')

        sums = entries.sum(axis=0)
        deviations = sums - 1.0
        bad = np.flatnonzero(np.abs(deviations) > config.guards.stochastic_tolerance)
        if bad.size:
            column = int(bad[0])
            raise ValueError(
                f'column {column} sums to {sums[column]!r} (deviation {deviations[column]:+.3e})'
            )
        return _frozen_array(entries / sums, np.float64)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]] | np.ndarray) -> 'StochasticMatrix':
        """
        build from the row-per-source layout of chain spec files (row x = distribution given x)
        """
        return cls(np.asarray(rows, dtype=np.float64).T)

    @classmethod
    def identity(cls, size: int) -> 'StochasticMatrix':
        return cls(np.eye(size))

    @classmethod
    def rank_one(cls, column: Sequence[float] | np.ndarray, size: int) -> 'StochasticMatrix':
        """
        every column equals `column` (an iid chain)
        """
        return cls(np.tile(np.asarray(column, dtype=np.float64)[:, None], (1, size)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape  # type: ignore[return-value]

    @property
    def is_square(self) -> bool:
        return self.entries.shape[0] == self.entries.shape[1]

    def column(self, source: int) -> np.ndarray:
        return self.entries[:, source]

    def rows(self) -> list[list[float]]:
        """
        row-per-source layout, the inverse of `from_rows`
        """
        return self.entries.T.tolist()


class ChainSpec(ArrayModel):
    """
    a Markov chain `(p1, A)` or a hidden Markov chain `(p1, A, B)`
    """
    state_count: int
    initial: StochasticVector
    transition: StochasticMatrix
    emission: StochasticMatrix | None = None
    name: str | None = None

    @model_validator(mode='after')
    def verify_fields(self):
        k = self.state_count
        assert k >= 1, f'`state_count` must be positive, but got `{k}`'
        assert self.initial.size == k, f'`initial` has {self.initial.size} entries, expect {k}'
        assert self.transition.shape == (k, k), f'`transition` has shape {self.transition.shape}, expect ({k}, {k})'
        if self.emission is not None:
            assert self.emission.shape[1] == k, \
                f'`emission` has {self.emission.shape[1]} columns, expect one per hidden state ({k})'
        return self

    @property
    def symbol_count(self) -> int:
        return self.state_count if self.emission is None else self.emission.shape[0]

    @property
    def is_hidden(self) -> bool:
        return self.emission is not None

    @property
    def effective_emission(self) -> StochasticMatrix:
        """
        the emission kernel, identity when the chain is observed directly
        """
        return self.emission if self.emission is not None else StochasticMatrix.identity(self.state_count)

    @property
    def spec_id(self) -> str:
        return self.name or f'chain-k{self.state_count}-m{self.symbol_count}'

    def with_initial(self, initial: StochasticVector) -> 'ChainSpec':
        return ChainSpec(
            state_count=self.state_count, initial=initial, transition=self.transition,
            emission=self.emission, name=self.name
        )

    def underlying_markov(self) -> 'ChainSpec':
        return ChainSpec(
            state_count=self.state_count, initial=self.initial, transition=self.transition,
            name=None if self.name is None else f'{self.name}/markov'
        )


class Trajectory(ArrayModel):
    observations: np.ndarray
    symbol_count: int
    hidden_states: np.ndarray | None = None
    state_count: int | None = None

    @field_validator('observations', 'hidden_states', mode='before')
    @classmethod
    def _validate_ids(cls, value: Any) -> np.ndarray | None:
        if value is None:
            return None
        ids = np.array(value, dtype=np.int64)
        if ids.ndim != 1:
            raise ValueError(f'a trajectory must be 1-d, but got shape {ids.shape}')
        return _frozen_array(ids, np.int64)

    @model_validator(mode='after')
    def verify_fields(self):
        obs = self.observations
        assert obs.size >= 1, 'a trajectory must not be empty'
        assert obs.min() >= 0 and obs.max() < self.symbol_count, \
            f'observation ids must be in [0, {self.symbol_count}), but got [{obs.min()}, {obs.max()}]'
        if self.hidden_states is not None:
            hidden = self.hidden_states
            assert self.state_count is not None, '`state_count` is required with `hidden_states`'
            assert hidden.size == obs.size, 'hidden states and observations must have the same length'
            assert hidden.min() >= 0 and hidden.max() < self.state_count, \
                f'hidden state ids must be in [0, {self.state_count})'
        return self

    def __len__(self) -> int:
        return int(self.observations.size)
