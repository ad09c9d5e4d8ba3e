from typing import Any

__all__ = (
    'EXIT_OK',
    'EXIT_VERIFICATION_FAILURE',
    'EXIT_INPUT_ERROR',
    'EXIT_INTERNAL_ERROR',
    'MixBoundError',
    'InputError',
    'ChainSpecError',
    'DimensionError',
    'NotErgodicError',
    'EnumerationLimitError',
    'ConvergenceError',
    'VerificationFailure',
)

EXIT_OK = 0
EXIT_VERIFICATION_FAILURE = 1
EXIT_INPUT_ERROR = 2
# 未处理的异常与数值失败
EXIT_INTERNAL_ERROR = 3


class MixBoundError(Exception):
    exit_code: int = EXIT_INPUT_ERROR

    def __init__(self, message: str, *, exit_code: int | None = None) -> None:
        super().__init__(message)
        self._message = message
        if exit_code is not None:
            self.exit_code = exit_code

    def __repr__(self):
        return f'{type(self).__name__}({self._message!r})'

    @property
    def message(self) -> str:
        return self._message


class InputError(MixBoundError):
    exit_code = EXIT_INPUT_ERROR


class ChainSpecError(InputError):
    def __init__(self, source: str, detail: str, *, line: int | None = None) -> None:
        """
        :param source: the file name (or `<string>`) of the chain spec
        :param detail: what is wrong
        :param line: 1-based line of the offending row, if known
        """
        location = f'{source}:{line}' if line is not None else source
        super().__init__(f'{location}: {detail}')
        self._source = source
        self._detail = detail
        self._line = line

    @property
    def source(self) -> str:
        return self._source

    @property
    def detail(self) -> str:
        return self._detail

    @property
    def line(self) -> int | None:
        return self._line


class DimensionError(InputError, ValueError):
    pass


class NotErgodicError(MixBoundError, ValueError):
    exit_code = EXIT_INPUT_ERROR


class EnumerationLimitError(MixBoundError):
    exit_code = EXIT_INPUT_ERROR

    def __init__(self, what: str, size: int, limit: int) -> None:
        super().__init__(
            f'enumeration guard exceeded: {what} needs {size} terms, but the limit is {limit}'
        )
        self.size = size
        self.limit = limit


class ConvergenceError(MixBoundError, ArithmeticError):
    exit_code = EXIT_INTERNAL_ERROR


class VerificationFailure(MixBoundError):
    exit_code = EXIT_VERIFICATION_FAILURE

    def __init__(self, message: str, report: Any | None = None) -> None:
        super().__init__(message)
        self._report = report

    @property
    def report(self) -> Any | None:
        return self._report
