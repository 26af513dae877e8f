"""
Utility functions for heston_escape.
"""
from .data_storage import DataStorage
from .logger import setup_logger
from .workers import ordered_map, worker_count

__all__ = ['DataStorage', 'setup_logger', 'ordered_map', 'worker_count']
