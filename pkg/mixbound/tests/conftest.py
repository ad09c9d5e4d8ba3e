from pathlib import Path
from typing import Callable
import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ..structs.chain import StochasticVector, StochasticMatrix, ChainSpec

TWO_STATE_ROWS = [[0.9, 0.1], [0.2, 0.8]]
TWO_STATE_PI = (2 / 3, 1 / 3)

TWO_STATE_YAML = '''\
name: two-state
states: 2
transition:
  - [0.9, 0.1]
  - [0.2, 0.8]
'''


def iid_spec(probs, name: str | None = None, states: int = 2) -> ChainSpec:
    """
    an iid chain: `states` hidden states with one shared emission column `probs`
    """
    probs = np.asarray(probs, dtype=np.float64)
    emission = StochasticMatrix(np.tile(probs[:, None], (1, states)))
    return ChainSpec(
        state_count=states,
        initial=StochasticVector.uniform(states),
        transition=StochasticMatrix.rank_one(np.full(states, 1.0 / states), states),
        emission=emission,
        name=name,
    )


@st.composite
def stochastic_vectors(draw, size: int | None = None, min_entry: float = 0.01) -> np.ndarray:
    size = draw(st.integers(2, 5)) if size is None else size
    weights = draw(arrays(np.float64, size, elements=st.floats(min_entry, 1.0)))
    if weights.sum() < 1e-3:
        weights[0] = 1.0
    return weights / weights.sum()


@st.composite
def positive_kernels(draw, size: int | None = None, min_entry: float = 0.01) -> StochasticMatrix:
    size = draw(st.integers(2, 5)) if size is None else size
    weights = draw(arrays(np.float64, (size, size), elements=st.floats(min_entry, 1.0)))
    weights[0, weights.sum(axis=0) < 1e-3] = 1.0
    return StochasticMatrix(weights / weights.sum(axis=0))


@pytest.fixture
def two_state_kernel() -> StochasticMatrix:
    return StochasticMatrix.from_rows(TWO_STATE_ROWS)


@pytest.fixture
def two_state_spec(two_state_kernel) -> ChainSpec:
    return ChainSpec(
        state_count=2, initial=StochasticVector(TWO_STATE_PI), transition=two_state_kernel, name='two-state'
    )


@pytest.fixture
def two_state_hidden_spec(two_state_kernel) -> ChainSpec:
    # emission columns (0.7, 0.3) and (0.1, 0.9), rho = (0.5, 0.5)
    return ChainSpec(
        state_count=2,
        initial=StochasticVector(TWO_STATE_PI),
        transition=two_state_kernel,
        emission=StochasticMatrix([[0.7, 0.1], [0.3, 0.9]]),
        name='two-state-hidden',
    )


@pytest.fixture
def write_spec(tmp_path) -> Callable[[str, str], Path]:
    def _write(text: str, filename: str = 'chain.yml') -> Path:
        path = tmp_path / filename
        path.write_text(text, encoding='u8')
        return path

    return _write
