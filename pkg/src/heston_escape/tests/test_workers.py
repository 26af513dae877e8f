"""
Unit tests for the thread-pool helpers.
"""
import os
import unittest
from unittest.mock import patch

from ..common.errors import ParameterDomainError
from ..utils.workers import THREADS_ENV, ordered_map, worker_count


class TestWorkers(unittest.TestCase):

    @patch.dict(os.environ, {THREADS_ENV: "4"})
    def test_worker_count_from_environment(self):
        self.assertEqual(worker_count(), 4)

    @patch.dict(os.environ, {THREADS_ENV: ""})
    def test_worker_count_default(self):
        self.assertEqual(worker_count(default=2), 2)

    def test_invalid_worker_count(self):
        for raw in ("0", "-3", "many"):
            with self.subTest(raw=raw), patch.dict(os.environ, {THREADS_ENV: raw}):
                with self.assertRaises(ParameterDomainError) as ctx:
                    worker_count()
                self.assertEqual(ctx.exception.field, THREADS_ENV)

    def test_ordered_map_keeps_order(self):
        items = list(range(50))
        for workers in (1, 4):
            with self.subTest(workers=workers):
                self.assertEqual(ordered_map(lambda i: i * i, items, workers=workers), [i * i for i in items])


if __name__ == '__main__':
    unittest.main()
