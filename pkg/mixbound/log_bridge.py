"""
将标准库 logging (numba, warnings) 的日志输出为 Loguru 日志
"""

import logging

__all__ = (
    'LoguruHandler',
    'capture_library_logging',
    'LIBRARY_LOGGERS',
)

# numba 的编译日志非常多, 只转发 WARNING 及以上
LIBRARY_LOGGERS: dict[str, int] = {
    'numba': logging.WARNING,
    'py.warnings': logging.WARNING,
}


class LoguruHandler(logging.Handler):
    def __init__(self, target_logger, level: int | str = 0):
        """
        Handler, 只要 logging.logger.addHandler(<self>) 即可
        :param target_logger: loguru Logger (loguru 没有类型 无法 typing)
        :param level: 日志等级
        """
        super().__init__(level)
        self._target_logger = target_logger

    def emit(self, record):
        try:
            level = self._target_logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        frame, depth = logging.currentframe(), 2

        while frame is not None and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1
        self._target_logger.opt(depth=depth, exception=record.exc_info) \
            .bind(name=record.name) \
            .log(level, record.getMessage())


def capture_library_logging(target_logger, loggers: dict[str, int] | None = None):
    """
    replace the handlers of the given stdlib loggers with a loguru handler
    and route `warnings.warn` through `py.warnings`

    :param target_logger: loguru Logger, 之后会使用该 logger 输出
    :param loggers: logger name -> minimum level, `None` to use `LIBRARY_LOGGERS`
    :return: None
    """
    logging.captureWarnings(True)
    loggers = LIBRARY_LOGGERS if loggers is None else loggers

    for name, level in loggers.items():
        logging_logger = logging.getLogger(name)
        if getattr(logging_logger, '__loguru_handled', False):
            target_logger.debug('stdlib logger ({}) was handled, skip to handle', name)
            continue

        for handler in logging_logger.handlers:  # 关闭旧的 handler 以不输出到控制台
            handler.close()
        logging_logger.handlers = []  # 清空 handlers
        logging_logger.addHandler(LoguruHandler(target_logger, level))
        logging_logger.setLevel(level)
        logging_logger.propagate = False
        setattr(logging_logger, '__loguru_handled', True)
