"""
Unit tests for the logger setup.
"""
import logging
import os
import tempfile
import unittest

from ..utils.logger import setup_logger

NAME = "heston_escape.test_logger"


def _drop_handlers():
    logger = logging.getLogger(NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


class TestSetupLogger(unittest.TestCase):

    def tearDown(self):
        _drop_handlers()

    def test_repeated_setup_does_not_duplicate_handlers(self):
        setup_logger(NAME)
        logger = setup_logger(NAME, level=logging.DEBUG)
        self.assertEqual(len(logger.handlers), 1)
        self.assertEqual(logger.handlers[0].level, logging.DEBUG)

    def test_file_handler(self):
        with tempfile.TemporaryDirectory() as tmp:
            log_dir = os.path.join(tmp, "logs")
            logger = setup_logger(NAME, log_dir)
            self.assertEqual(len(logger.handlers), 2)
            logger.debug("written to the file only")
            for handler in logger.handlers:
                handler.flush()
            files = os.listdir(log_dir)
            self.assertEqual(len(files), 1)
            self.assertTrue(files[0].endswith(".log"))
            with open(os.path.join(log_dir, files[0])) as f:
                self.assertIn("written to the file only", f.read())
            _drop_handlers()


if __name__ == '__main__':
    unittest.main()
