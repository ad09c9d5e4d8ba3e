from typing import Any, Callable, TypeVar, TypeAlias
from pydantic import ValidationError

from ..log import logger
from ..structs.exceptions import EXIT_OK, EXIT_INPUT_ERROR, EXIT_INTERNAL_ERROR, MixBoundError

__all__ = (
    'add_handler',
    'add_mixbound_error_handler',
    'add_validation_error_handler',
    'add_default_handlers',
    'run_guarded',
)

_ExceptionType = TypeVar('_ExceptionType', bound=type[BaseException])
_ExceptionHandlerType: TypeAlias = Callable[[Any], int | None]
_exception_handlers: dict[type[BaseException], list[_ExceptionHandlerType]] = {}


def _get_handlers(exc: BaseException) -> list[_ExceptionHandlerType]:
    # 按 MRO 查找, 子类优先
    for cls in type(exc).__mro__:
        if cls in _exception_handlers:
            return _exception_handlers[cls]
    return []


def add_handler(exc: _ExceptionType, handler: _ExceptionHandlerType):
    """
    register `handler` for `exc` and its subclasses; a handler returns the exit code, or `None` to pass
    the exception on to the next handler
    """
    if exc not in _exception_handlers:
        _exception_handlers[exc] = []

    if handler not in _exception_handlers[exc]:
        _exception_handlers[exc].append(handler)


def add_mixbound_error_handler():
    """
    注意: 相对引入和绝对引入的 Exception 不相等, 请使用相对导入 (以 `.` 开头) 的 MixBoundError
    """
    def _handle_mixbound_error(exc: MixBoundError) -> int:
        logger.error('{}: {}', type(exc).__name__, exc.message)
        return exc.exit_code

    add_handler(MixBoundError, _handle_mixbound_error)


def add_validation_error_handler():
    def _handle_validation_error(exc: ValidationError) -> int:
        for error in exc.errors():
            location = '.'.join(str(part) for part in error['loc']) or exc.title
            logger.error('invalid {}: {}', location, error['msg'])
        return EXIT_INPUT_ERROR

    add_handler(ValidationError, _handle_validation_error)


def add_default_handlers():
    add_mixbound_error_handler()
    add_validation_error_handler()


def run_guarded(func: Callable[..., int | None], *args, **kwargs) -> int:
    """
    call `func` and turn what it raises into an exit code

    :return: the exit code of `func` (`None` counts as success), of the first handler that takes the
        exception, or `EXIT_INTERNAL_ERROR` for an exception nobody handles
    """
    try:
        result = func(*args, **kwargs)
        return EXIT_OK if result is None else result
    except Exception as exc:
        for handler in _get_handlers(exc):
            code = handler(exc)
            if code is not None:
                return code

        logger.exception(exc)
        return EXIT_INTERNAL_ERROR
