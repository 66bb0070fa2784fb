import logging
import os
from os.path import dirname, abspath
from time import strftime, localtime
from typing import Optional

DEBUG = 'debug'
ERROR = 'error'
INFO = 'info'
WARNING = 'warning'

_LOGGERS = {
    DEBUG: logging.debug,
    ERROR: logging.error,
    INFO: logging.info,
    WARNING: logging.warning,
}

quiet = False


def timestamp() -> str:
    return strftime('[%Y-%m-%d %H:%M:%S]', localtime())


def init_logging(log_name: str, log_dir: Optional[str] = None):
    """
    Routes the root logger into log/<log_name>.log
    @param log_name: base name of the log file
    @param log_dir: directory of the log file, defaults to the repository's log dir
    """
    if log_dir is None:
        import config_util.cio as cio
        log_dir = os.path.join(dirname(dirname(abspath(__file__))), cio.get_log_dir())
    os.makedirs(log_dir, exist_ok=True)
    logging.basicConfig(filename=os.path.join(log_dir, f'{log_name}.log'),
                        level=logging.DEBUG,
                        format='%(asctime)s | %(name)s | %(levelname)s | %(message)s')


def print_and_log(text: str, log_type: str):
    if not quiet:
        print(f'{timestamp()} {text}')
    _LOGGERS.get(log_type, logging.info)(text)
