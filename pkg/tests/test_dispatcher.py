"""
tests/test_dispatcher.py

Unit tests for the sweep dispatcher: result ordering, worker threads and
failure propagation.
"""

import threading
import time
import unittest

from scatter_bench.dispatcher import SweepDispatcher, SweepJob
from scatter_bench.helpers import SolverError, ValidationError


def job(t, value=None, delay=0.0, calls=None):
    def task():
        if calls is not None:
            calls.append(t)
        time.sleep(delay)
        return t if value is None else value
    return SweepJob(t, f"case-{t}", task)


def failing(t, error):
    def task():
        raise error
    return SweepJob(t, f"case-{t}", task)


class TestSweepDispatcher(unittest.TestCase):
    def test_results_sorted_by_key(self):
        jobs = [job(0.3, delay=0.0), job(0.1, delay=0.05), job(0.2, delay=0.02)]
        self.assertEqual(SweepDispatcher(3).run(jobs), [0.1, 0.2, 0.3])

    def test_single_worker_runs_inline(self):
        seen = []

        def task():
            seen.append(threading.current_thread())
            return 1

        SweepDispatcher(1).run([SweepJob(0, "case-0", task)])
        self.assertIs(seen[0], threading.main_thread())

    def test_empty(self):
        self.assertEqual(SweepDispatcher(2).run([]), [])

    def test_duplicate_keys(self):
        with self.assertRaises(ValidationError):
            SweepDispatcher(2).run([job(0.1), job(0.1)])

    def test_worker_count(self):
        with self.assertRaises(ValidationError):
            SweepDispatcher(0)

    def test_solver_error_gets_case_id(self):
        with self.assertRaises(SolverError) as ctx:
            SweepDispatcher(1).run([job(0.1), failing(0.2, SolverError("singular", condition=1e20))])
        self.assertEqual(ctx.exception.case_id, "case-0.2")
        self.assertEqual(ctx.exception.condition, 1e20)
        self.assertIn("case-0.2", str(ctx.exception))

    def test_tagged_error_is_not_tagged_twice(self):
        error = SolverError("singular").with_case("case-0.2")
        with self.assertRaises(SolverError) as ctx:
            SweepDispatcher(1).run([failing(0.2, error)])
        self.assertEqual(str(ctx.exception).count("case-0.2"), 1)

    def test_unexpected_errors_pass_through(self):
        error = ValueError("boom")
        with self.assertRaises(ValueError) as ctx:
            SweepDispatcher(2).run([job(0.4), failing(0.5, error)])
        self.assertIs(ctx.exception, error)

    def test_validation_error_passes_through(self):
        with self.assertRaises(ValidationError):
            SweepDispatcher(2).run([failing(0.5, ValidationError("bad mesh")), job(0.6)])

    def test_failure_stops_pending_jobs(self):
        calls = []
        jobs = [failing(0.1, SolverError("singular")), job(0.2, calls=calls), job(0.3, calls=calls)]
        with self.assertRaises(SolverError):
            SweepDispatcher(1).run(jobs)
        self.assertEqual(calls, [])


if __name__ == "__main__":
    unittest.main()
