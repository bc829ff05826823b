"""
Dispatcher for sweep members

Sweep members (one scatterer pair per family parameter t) are independent
jobs. The dispatcher keeps them in a pending deque and hands them to a pool
of worker threads. Finished results are collected by job key and returned in
key order, whatever order the workers finish in.

If a job raises, the remaining pending jobs are dropped, the failure is
logged and the error is re-raised from ``run``. A solver error is tagged with
the job's case id first; anything else propagates unchanged.
"""

import logging
import threading
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Dict, Hashable, List, Optional, Sequence

from scatter_bench.helpers import SolverError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepJob:
    key: Hashable        # sort key of the result, the family parameter t
    case_id: str
    task: Callable[[], Any]


class SweepDispatcher:
    """
    Runs ``SweepJob`` objects on ``workers`` threads.

    A single worker runs the jobs inline in submission order.
    """

    def __init__(self, workers: int = 1):
        if workers < 1:
            raise ValidationError(f"Worker count must be at least 1, got {workers}")
        self.workers = workers
        self.pending_jobs = deque()
        self.results: Dict[Hashable, Any] = {}
        self.failure: Optional[tuple] = None

        # Locks for shared state
        self.jobs_lock = threading.Lock()
        self.results_lock = threading.Lock()

    def _next_job(self) -> Optional[SweepJob]:
        with self.jobs_lock:
            if self.failure is not None or not self.pending_jobs:
                return None
            return self.pending_jobs.popleft()

    def _work(self) -> None:
        while True:
            job = self._next_job()
            if job is None:
                return
            try:
                value = job.task()
            except Exception as e:
                logger.error(f"Sweep member {job.case_id} failed: {e}")
                with self.jobs_lock:
                    if self.failure is None:
                        self.failure = (job, e)
                    self.pending_jobs.clear()
                return
            with self.results_lock:
                self.results[job.key] = value
            logger.info(f"Sweep member {job.case_id} done")

    def run(self, jobs: Sequence[SweepJob]) -> List[Any]:
        """
        Run every job and return the results sorted by job key.

        :raises ValidationError: on duplicate job keys
        :raises SolverError: a failing job's solver error, tagged with its case id
        :raises Exception: any other job error, unchanged
        """
        keys = [job.key for job in jobs]
        if len(set(keys)) != len(keys):
            raise ValidationError("Sweep jobs must have distinct keys")

        self.pending_jobs = deque(jobs)
        self.results = {}
        self.failure = None

        if self.workers == 1 or len(jobs) <= 1:
            self._work()
        else:
            threads = [threading.Thread(target=self._work, name=f"sweep-worker-{n}")
                       for n in range(min(self.workers, len(jobs)))]
            for thread in threads:
                thread.start()
            for thread in threads:
                thread.join()

        if self.failure is not None:
            job, error = self.failure
            if isinstance(error, SolverError) and error.case_id != job.case_id:
                raise error.with_case(job.case_id) from error
            raise error

        return [self.results[key] for key in sorted(self.results)]
