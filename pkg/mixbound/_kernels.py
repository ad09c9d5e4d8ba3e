"""
numba kernels of the trajectory walk
"""
import numpy as np
from numba import njit

__all__ = (
    'cumulative_columns',
    'walk_chain',
    'emit_symbols',
)


def cumulative_columns(entries: np.ndarray) -> np.ndarray:
    """
    row x of the result is the cumulative distribution of column x (a 1-d input is a single column)

    values from the last positive-probability state onward are pinned to 1, so rounding in the
    cumulative sum can not make a trailing zero-probability state reachable
    """
    columns = np.atleast_2d(np.asarray(entries, dtype=np.float64).T)
    cumulative = np.minimum(np.cumsum(columns, axis=1), 1.0)
    size = columns.shape[1]
    last_positive = size - 1 - np.argmax(columns[:, ::-1] > 0, axis=1)
    cumulative[np.arange(size)[None, :] >= last_positive[:, None]] = 1.0
    return np.ascontiguousarray(cumulative)


@njit(cache=True, nogil=True)
def _draw(cumulative: np.ndarray, u: float) -> int:
    # side='right' never lands on a zero-probability state
    index = np.searchsorted(cumulative, u, side='right')
    last = cumulative.shape[0] - 1
    return index if index <= last else last


@njit(cache=True, nogil=True)
def walk_chain(cumulative_initial: np.ndarray, cumulative_transition: np.ndarray, uniforms: np.ndarray,
               out: np.ndarray) -> None:
    out[0] = _draw(cumulative_initial, uniforms[0])
    for i in range(1, out.shape[0]):
        out[i] = _draw(cumulative_transition[out[i - 1]], uniforms[i])


@njit(cache=True, nogil=True)
def emit_symbols(cumulative_emission: np.ndarray, hidden: np.ndarray, uniforms: np.ndarray,
                 out: np.ndarray) -> None:
    for i in range(hidden.shape[0]):
        out[i] = _draw(cumulative_emission[hidden[i]], uniforms[i])
