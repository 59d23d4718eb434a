"""Readers for the CSV/text artifacts a simulation run leaves behind.

A run directory holds ``energies.csv``, ``trace.csv``, ``config.txt``, and —
depending on the experiment — ``hysteresis.csv`` and ``damage.csv``. Every
CSV starts with a header row; ``config.txt`` holds ``key=value`` lines where
defaulted values carry a trailing ``# default`` marker and strings are
quoted.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PlotsError",
    "MissingColumnError",
    "read_table",
    "read_config",
    "require_columns",
    "RunDirectory",
]


class PlotsError(Exception):
    """Base class for all errors raised by this package."""


class MissingColumnError(PlotsError):
    """A CSV exists but lacks a column its figure needs.

    Attributes
    ----------
    column:
        Name of the first missing header.
    path:
        The offending file.
    """

    def __init__(self, column: str, path: str, present: list[str]):
        super().__init__(f"{path}: missing column {column!r} "
                         f"(has {', '.join(present)})")
        self.column = column
        self.path = path


def read_table(path: str) -> dict[str, np.ndarray]:
    """Read a headered CSV into a column-name -> float-array mapping."""
    try:
        with open(path) as f:
            header = f.readline().strip()
            if not header:
                raise PlotsError(f"{path}: empty file, expected a header row")
            names = header.split(",")
            try:
                data = np.loadtxt(f, delimiter=",", ndmin=2)
            except ValueError as exc:
                raise PlotsError(f"{path}: malformed numeric data "
                                 f"({exc})") from exc
    except OSError as exc:
        raise PlotsError(f"cannot read {path!r}: {exc}") from exc
    if data.size and data.shape[1] != len(names):
        raise PlotsError(f"{path}: {data.shape[1]} data columns under "
                         f"{len(names)} header names")
    if not data.size:
        data = np.empty((0, len(names)))
    return {name: data[:, i] for i, name in enumerate(names)}


def require_columns(table: dict[str, np.ndarray], names: list[str],
                    path: str) -> None:
    """Raise MissingColumnError naming the first absent column."""
    for name in names:
        if name not in table:
            raise MissingColumnError(name, path, list(table))


def read_config(path: str) -> dict:
    """Parse a run's config echo; values are str, int, or float."""
    values: dict = {}
    try:
        lines = open(path).read().splitlines()
    except OSError as exc:
        raise PlotsError(f"cannot read {path!r}: {exc}") from exc
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PlotsError(f"{path}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if value.startswith(("'", '"')) and value.endswith(value[0]):
            values[key] = value[1:-1]
        else:
            try:
                as_float = float(value)
            except ValueError:
                values[key] = value
            else:
                values[key] = int(as_float) if as_float.is_integer() \
                    and "." not in value and "e" not in value.lower() \
                    else as_float
    return values


@dataclass
class RunDirectory:
    """Lazy view of one run directory's artifacts."""

    path: str
    _tables: dict = field(default_factory=dict, repr=False)
    _config: dict | None = field(default=None, repr=False)

    @property
    def config(self) -> dict:
        if self._config is None:
            self._config = read_config(os.path.join(self.path, "config.txt"))
        return self._config

    def file(self, name: str) -> str:
        return os.path.join(self.path, name)

    def has(self, name: str) -> bool:
        return os.path.exists(self.file(name))

    def table(self, name: str) -> dict[str, np.ndarray]:
        if name not in self._tables:
            self._tables[name] = read_table(self.file(name))
        return self._tables[name]

    def label(self) -> str:
        """Short configuration echo used in figure titles and legends."""
        cfg = self.config
        return (f"{cfg.get('experiment', '?')}  scheme={cfg.get('scheme', '?')}"
                f"  dt={cfg.get('dt', float('nan')):g}"
                f"  mesh level {cfg.get('mesh_level', '?')}")
