import yaml
from pathlib import Path
from datetime import time, timedelta
from typing import Callable, Any, TypeVar, Iterable, Literal
from pydantic import BaseModel, model_validator, Field

try:
    # LibYAML is much faster
    from yaml import CSafeLoader as Loader, CSafeDumper as Dumper
except ImportError:
    # fallback: default implement based on Python
    from yaml import SafeLoader as Loader, SafeDumper as Dumper

APP_VERSION = '0.1.0'
MERGED_CONFIG_PATH = './merged.config.yml'
DEVMODE_ENV = 'MIXBOUND_DEVMODE'

OutputFormat = Literal['text', 'csv', 'structured']


class LogConfig(BaseModel):
    stderr_level: int | str = Field(default='INFO', description='the log level of stderr')
    stderr_format: str | None = Field(
        default=None, description='the log format of stderr (None to use default format by loguru)'
    )

    file_enable: bool = Field(default=False, description='also write logs to `logs/<YYYY>-<MM>-<DD>.log`')
    file_level: int | str = Field(default='DEBUG', description='the log level of log file')
    file_format: str | None = Field(
        default=None, description='the log format of log file (None to use default format by loguru)'
    )
    file_rotation: str | int | time | timedelta = Field(default='00:00', description='the log rotation of log file')
    file_retention: str | int | timedelta = Field(default='30 days', description='the log retention of log file')


class RunDefaults(BaseModel):
    """
    defaults of the command line flags, every flag given on the command line wins
    """
    n: int = Field(default=1000, description='chain length')
    trials: int = Field(default=10_000, description='independent trajectories per Monte Carlo experiment')
    seed: int = Field(default=0, description='64-bit seed, negative values are taken modulo 2**64')
    horizon: int = Field(default=64, description='number of tau_s values used to fit (G, theta)')
    epsilon_grid: list[float] = Field(
        default_factory=lambda: [0.02, 0.05, 0.1, 0.2],
        description='per-coordinate deviation scales (the probability is taken at n * epsilon)'
    )
    output_format: OutputFormat = 'text'
    workers: int = Field(default=1, description='threads sharing the Monte Carlo trials')
    delta_mc: float = Field(default=1e-3, description='confidence of the Hoeffding half-width per grid row')
    pairs: int = Field(default=100_000, description='random trajectory pairs of the Lipschitz audit')
    instances: int = Field(default=200, description='random instances of the exact lemma suite')
    limit: int = Field(default=4 ** 5, description='enumeration size of one exact lemma suite instance')

    @model_validator(mode='after')
    def verify_fields(self):
        ATTR_NAMES = ('n', 'trials', 'horizon', 'workers', 'pairs', 'instances', 'limit')
        for _attr in ATTR_NAMES:
            _attr_value = getattr(self, _attr)
            assert _attr_value >= 1, f'`{_attr}` must be positive, but got `{_attr_value}`'

        assert self.epsilon_grid, '`epsilon_grid` must not be empty'
        assert all(eps > 0 for eps in self.epsilon_grid), '`epsilon_grid` must only contain positive values'
        assert 0 < self.delta_mc < 1, f'`delta_mc` must be in (0, 1), but got `{self.delta_mc}`'
        return self


class GuardConfig(BaseModel):
    enumeration_limit: int = Field(
        default=10 ** 7, description='max number of trajectories (or suffix terms) an exact enumeration may visit'
    )
    stochastic_tolerance: float = Field(
        default=1e-9, description='absolute tolerance of the sum-to-one check of vectors and kernel columns'
    )
    stationary_tolerance: float = Field(default=1e-12, description='max ||A pi - pi||_1 of a stationary vector')
    power_iteration_tolerance: float = Field(default=1e-10, description='relative tolerance of ||Delta||_2')
    power_iteration_max_iter: int = Field(default=10 ** 5, description='iteration cap of ||Delta||_2')
    tau_noise_floor: float = Field(
        default=1e-13, description='tau_s values below this are treated as zero while fitting (G, theta)'
    )

    @model_validator(mode='after')
    def verify_fields(self):
        assert self.enumeration_limit >= 1, '`enumeration_limit` must be positive'
        assert self.power_iteration_max_iter >= 1, '`power_iteration_max_iter` must be positive'
        ATTR_NAMES = ('stochastic_tolerance', 'stationary_tolerance', 'power_iteration_tolerance', 'tau_noise_floor')
        for _attr in ATTR_NAMES:
            _attr_value = getattr(self, _attr)
            assert 0 < _attr_value < 1, f'`{_attr}` must be in (0, 1), but got `{_attr_value}`'
        return self


class Config(BaseModel):
    log: LogConfig = LogConfig()
    run: RunDefaults = RunDefaults()
    guards: GuardConfig = GuardConfig()

    @property
    def version(self) -> str:
        return APP_VERSION


def _load_yaml(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists() or not path.is_file():
        return {}

    try:
        with path.open('r', encoding='u8') as fp:
            loaded = yaml.load(fp, Loader=Loader)
            return loaded if isinstance(loaded, dict) else {}
    except (FileNotFoundError, PermissionError):
        return {}


_ReturnType = TypeVar('_ReturnType')


def _map_files(
        filenames: str | Iterable[str], suffixes: str | Iterable[str], callback: Callable[[Path], _ReturnType],
        *, base_dir: str | Path = '.'
) -> list[_ReturnType]:
    result = []

    filenames = (filenames,) if isinstance(filenames, str) else filenames
    suffixes = (suffixes,) if isinstance(suffixes, str) else tuple(suffixes)

    for filename in filenames:
        path = Path(base_dir) / (filename + suffixes[0])  # 避免后缀被吞
        for suffix in suffixes:
            path_with_suffix = path.with_suffix(suffix)
            if not path_with_suffix.is_file():
                continue
            result.append(callback(path_with_suffix))

    return result


def _merge_dict(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """
    merge `override` into `base` recursively, so a file may override a single field of a section
    """
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge_dict(merged[key], value)
        else:
            merged[key] = value
    return merged


def create_config(config: Config, *, path: str | Path = MERGED_CONFIG_PATH, force_write: bool = True) -> Path | None:
    """
    generate a complete merged configuration file
    NOTE:
    you can cp, edit and rename it to make your own config

    :return: the written path, or None when nothing was written
    """
    path = Path(path)
    if not force_write and path.exists():
        return None

    try:
        with path.open('w', encoding='u8') as fp:
            fp.write(yaml.dump(
                config.model_dump(mode='json'),
                default_flow_style=False,
                allow_unicode=True,
                sort_keys=False,
                Dumper=Dumper,
            ))
    except (FileExistsError, PermissionError):
        return None
    return path


def load_config(base_dir: str | Path = '.') -> Config:
    from os import getenv
    _format_key: Callable[[str], str] = lambda key: key.strip().lower().replace('-', '_')

    def _format_keys(value: Any) -> Any:
        if not isinstance(value, dict):
            return value
        return {_format_key(str(k)): _format_keys(v) for k, v in value.items()}

    _is_dev = getenv(DEVMODE_ENV, '').strip() == '1'
    filenames = ('config', 'prod.config') + (('dev.config',) if _is_dev else ())
    config_dict: dict = {}
    for config in _map_files(filenames, ('.json', '.yaml', '.yml'), _load_yaml, base_dir=base_dir):
        # 统一化为小写的 key
        config_dict = _merge_dict(config_dict, _format_keys(config))

    return Config(**config_dict)
