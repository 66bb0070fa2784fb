import logging
import threading
from queue import Queue
from typing import Callable, Optional

from tqdm import tqdm

import config_util.cio as cio
import config_util.logging as log
from dyadic.sp_exception import ConfigError, SPException
from dyadic.structs import InstanceResult, instance_result

logger = logging.getLogger(__name__)

Task = Callable[[], InstanceResult]


class ExperimentQueue:
    """
    Wrapper class around queue.Queue running experiment instances on daemon worker threads
    """

    def __init__(self, threads: Optional[int] = None):
        """
        Constructor for ExperimentQueue
        @param threads: worker count, SPARSE_POINCARE_THREADS or sp.config by default
        """
        threads = cio.get_threads() if threads is None else threads
        if cio.get_max_threads() >= threads >= 1:
            self.threads = threads
            self.q = Queue()
            self.results = {}
            self._lock = threading.Lock()
            logger.info(f'Init experiment queue with {threads} workers')
        else:
            logger.error(f'Wrong worker count: {threads} - must be in range of (1, {cio.get_max_threads()})!')
            raise ConfigError('threads', f'worker count {threads} not in range (1, {cio.get_max_threads()})')

    def put(self, index: int, label: str, task: Task):
        """
        Add an instance to the queue
        @param index: position of the instance in the report
        @param label: instance label, used when the task fails
        @param task: pure callable returning an InstanceResult
        """
        self.q.put((index, label, task))
        logger.debug(f'Added {label} to queue, current queue size: {self.q.qsize()}')

    def _run(self, index: int, label: str, task: Task):
        try:
            result = task()
        except ConfigError:
            raise
        except SPException as e:
            log.print_and_log(f'Instance {label} failed: {e}', log.WARNING)
            result = instance_result(label, False, 0.0, 0.0, witness={'error': str(e)}, status='error')
        with self._lock:
            self.results[index] = result

    def _worker(self, progress: tqdm, errors: list):
        while True:
            item = self.q.get()
            if item is None:
                self.q.task_done()
                return
            try:
                self._run(*item)
            except Exception as e:
                errors.append(e)
            finally:
                progress.update(1)
                self.q.task_done()

    def process(self, description: str = 'Running instances') -> list[InstanceResult]:
        """
        Drains the queue and returns the results in index order
        """
        total = self.q.qsize()
        progress = tqdm(total=total, desc=f'{log.timestamp()} {description}', disable=log.quiet or total == 0)
        errors = []
        workers = []
        for i in range(min(self.threads, max(total, 1))):
            worker = threading.Thread(name=f'experiment_worker_{i}', target=self._worker, args=(progress, errors))
            worker.daemon = True
            worker.start()
            workers.append(worker)
        for _ in workers:
            self.q.put(None)
        self.q.join()
        progress.close()
        if errors:
            raise errors[0]
        results = [self.results[index] for index in sorted(self.results)]
        self.results = {}
        return results

    def length(self) -> int:
        """
        Wrapper function for present number of elements in queue
        @return: number of pending instances
        """
        return self.q.qsize()

    def is_empty(self) -> bool:
        return self.q.empty()
