"""
Data storage utilities for heston_escape: figure grids, raw Monte-Carlo samples
and flat key=value configuration files.
"""
import logging
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values

from ..common.errors import ParameterDomainError

logger = logging.getLogger(__name__)

# 17 significant digits in scientific notation
FLOAT_FORMAT = "%.16e"
SAMPLE_COLUMNS = ["path_index", "exit_tau", "censored"]
CONFIG_KEYS = ("alpha", "m", "theta", "k", "L", "modes", "rel_tol", "seed", "paths", "dt")

PathLike = Union[str, Path]


class DataStorage:
    def __init__(self, base_dir: PathLike = "."):
        self.base_dir = Path(base_dir)

    def _resolve(self, path: PathLike) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path

    def _write(self, df: pd.DataFrame, path: PathLike) -> Path:
        filepath = self._resolve(path)
        try:
            filepath.parent.mkdir(parents=True, exist_ok=True)
            df.to_csv(filepath, index=False, float_format=FLOAT_FORMAT,
                      lineterminator="\n", encoding="utf-8")
        except OSError as e:
            raise OSError(f"Could not write {filepath}: {e}") from e
        logger.debug(f"Wrote {len(df)} rows to {filepath}")
        return filepath

    def save_grid_csv(self, df: pd.DataFrame, path: PathLike) -> Path:
        """Save a figure grid; every float is written with 17 significant digits."""
        return self._write(df, path)

    def save_samples_csv(self, exit_tau: np.ndarray, censored: np.ndarray,
                         path: PathLike, first_index: int = 0) -> Path:
        """Save raw exit times with header ``path_index,exit_tau,censored``."""
        df = pd.DataFrame({
            "path_index": np.arange(first_index, first_index + len(exit_tau), dtype=np.int64),
            "exit_tau": np.asarray(exit_tau, dtype=float),
            "censored": np.asarray(censored, dtype=bool).astype(np.int64),
        }, columns=SAMPLE_COLUMNS)
        return self._write(df, path)

    def load_csv(self, path: PathLike) -> pd.DataFrame:
        """Load a CSV written by this class."""
        filepath = self._resolve(path)
        try:
            return pd.read_csv(filepath)
        except OSError as e:
            raise OSError(f"Could not read {filepath}: {e}") from e

    def load_config(self, path: PathLike, allowed: Optional[Iterable[str]] = None) -> Dict[str, str]:
        """Read a flat key=value config file; unknown keys are rejected."""
        filepath = self._resolve(path)
        if not filepath.is_file():
            raise OSError(f"Config file not found: {filepath}")
        values = dotenv_values(filepath)
        allowed = set(CONFIG_KEYS if allowed is None else allowed)
        for key, value in values.items():
            if key not in allowed:
                raise ParameterDomainError(key, value, f"unknown config key in {filepath}")
            if value is None or value.strip() == "":
                raise ParameterDomainError(key, value, f"empty value in {filepath}")
        return {key: value.strip() for key, value in values.items()}
