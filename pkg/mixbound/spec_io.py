"""
Chain spec files.

```yaml
name: two-state        # optional, becomes the report id (default: the file stem)
states: 2
initial: [0.5, 0.5]    # optional, default: the stationary distribution
transition:            # row x = law of the next state given x
  - [0.9, 0.1]
  - [0.2, 0.8]
symbols: 2             # required iff `emission` is given
emission:              # row x = law of the observed symbol given hidden state x
  - [0.7, 0.3]
  - [0.1, 0.9]
```

JSON is accepted as well. Rows are transposed into the column-stochastic kernels used everywhere else.
"""
import math
from pathlib import Path
from typing import Any
import yaml

from .config import Loader
from .shared import config
from .chain_core import stationary_distribution
from .structs.chain import StochasticVector, StochasticMatrix, ChainSpec
from .structs.exceptions import ChainSpecError

__all__ = (
    'SPEC_KEYS',
    'parse_chain_spec',
    'load_chain_spec',
)

SPEC_KEYS = ('name', 'states', 'symbols', 'initial', 'transition', 'emission')


def _value_nodes(root: yaml.Node | None) -> dict[str, yaml.Node]:
    if not isinstance(root, yaml.MappingNode):
        return {}
    return {key.value: value for key, value in root.value if isinstance(key, yaml.ScalarNode)}


def _line(node: yaml.Node | None) -> int | None:
    return None if node is None else node.start_mark.line + 1


def _row_line(node: yaml.Node | None, row: int) -> int | None:
    if isinstance(node, yaml.SequenceNode) and row < len(node.value):
        return _line(node.value[row])
    return _line(node)


class _Validator:
    def __init__(self, source: str, nodes: dict[str, yaml.Node]) -> None:
        self.source = source
        self.nodes = nodes
        self.tolerance = config.guards.stochastic_tolerance

    def fail(self, key: str, detail: str, *, row: int | None = None):
        node = self.nodes.get(key)
        line = _line(node) if row is None else _row_line(node, row)
        raise ChainSpecError(self.source, detail, line=line)

    def count(self, data: dict[str, Any], key: str) -> int:
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            self.fail(key, f'`{key}` must be a positive integer, but got {value!r}')
        return value

    def distribution(self, key: str, row: Any, size: int, *, index: int | None = None) -> list[float]:
        what = f'`{key}`' if index is None else f'`{key}` row {index}'
        if not isinstance(row, list):
            self.fail(key, f'{what} must be a list of {size} probabilities, but got {row!r}', row=index)
        if len(row) != size:
            self.fail(key, f'{what} has {len(row)} entries, expect {size}', row=index)
        for value in row:
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                self.fail(key, f'{what} holds {value!r}, which is not a finite number', row=index)
            if value < 0:
                self.fail(key, f'{what} holds the negative entry {value!r}', row=index)
        total = math.fsum(row)
        if abs(total - 1.0) > self.tolerance:
            self.fail(key, f'{what} sums to {total!r} (deviation {total - 1.0:+.3e})', row=index)
        return [float(value) for value in row]

    def kernel(self, data: dict[str, Any], key: str, rows: int, columns: int) -> list[list[float]]:
        value = data[key]
        if not isinstance(value, list):
            self.fail(key, f'`{key}` must be a list of rows, but got {value!r}')
        if len(value) != rows:
            self.fail(key, f'`{key}` has {len(value)} rows, expect one per state ({rows})')
        return [self.distribution(key, row, columns, index=index) for index, row in enumerate(value)]


def parse_chain_spec(text: str, source: str = '<string>', *, default_name: str | None = None) -> ChainSpec:
    """
    :param text: YAML (or JSON) text of a chain spec
    :param source: file name used in diagnostics
    :param default_name: report id when the spec has no `name`
    :raise ChainSpecError: the text is not a valid chain spec, the message names the line
    :raise NotErgodicError: `initial` is omitted and the kernel has no unique stationary distribution
    """
    try:
        root = yaml.compose(text, Loader=Loader)
        data = yaml.load(text, Loader=Loader)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        raise ChainSpecError(
            source, f'not valid YAML: {e.problem or e}', line=None if mark is None else mark.line + 1
        ) from e
    except yaml.YAMLError as e:
        raise ChainSpecError(source, f'not valid YAML: {e}') from e

    if not isinstance(data, dict):
        raise ChainSpecError(source, 'a chain spec must be a mapping', line=_line(root))

    validator = _Validator(source, _value_nodes(root))
    unknown = sorted(str(key) for key in data if key not in SPEC_KEYS)
    if unknown:
        raise ChainSpecError(source, f'unknown field(s) {unknown}, expect a subset of {list(SPEC_KEYS)}')
    for key in ('states', 'transition'):
        if key not in data:
            raise ChainSpecError(source, f'missing required field `{key}`', line=_line(root))
    if ('symbols' in data) != ('emission' in data):
        present, missing = ('symbols', 'emission') if 'symbols' in data else ('emission', 'symbols')
        validator.fail(present, f'`{missing}` is required together with `{present}`')

    k = validator.count(data, 'states')
    transition = StochasticMatrix.from_rows(validator.kernel(data, 'transition', k, k))

    emission = None
    if 'emission' in data:
        m = validator.count(data, 'symbols')
        emission = StochasticMatrix.from_rows(validator.kernel(data, 'emission', k, m))

    if data.get('initial') is not None:
        initial = StochasticVector(validator.distribution('initial', data['initial'], k))
    else:
        initial = stationary_distribution(transition)

    name = data.get('name', default_name)
    if name is not None and not isinstance(name, str):
        validator.fail('name', f'`name` must be a string, but got {name!r}')

    return ChainSpec(state_count=k, initial=initial, transition=transition, emission=emission, name=name)


def load_chain_spec(path: str | Path) -> ChainSpec:
    """
    :raise ChainSpecError: the file can not be read or is not a valid chain spec
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='u8')
    except (OSError, UnicodeDecodeError) as e:
        raise ChainSpecError(str(path), f'can not read the chain spec: {e}') from e
    return parse_chain_spec(text, str(path), default_name=path.stem)
