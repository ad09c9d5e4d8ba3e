from .config import load_config

__all__ = (
    'config',
)

config = load_config()
