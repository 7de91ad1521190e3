"""Reader for the versioned CSV tables the snlab CLI writes.

The format is fixed: a ``# schema: snlab-csv-1`` line, one header row
of comma-separated column names, then float rows. Anything else is
rejected up front, naming the file and the offending part, so a figure
is never silently built from a file the contract does not cover.
"""

from __future__ import annotations

from dataclasses import dataclass
from io import StringIO
from pathlib import Path

import numpy as np

__all__ = ["CSV_SCHEMA", "ContractError", "Table", "read_table"]

CSV_SCHEMA = "snlab-csv-1"


class ContractError(ValueError):
    """Input file is missing, mislabeled, or lacks a required column."""


@dataclass(frozen=True)
class Table:
    """One parsed table: named float columns of equal length."""

    path: Path
    names: tuple[str, ...]
    data: np.ndarray  # shape (rows, len(names))

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        if name not in self.names:
            raise ContractError(
                f"{self.path}: required column {name!r} not found "
                f"(file has: {', '.join(self.names)})")
        return self.data[:, self.names.index(name)]


def read_table(path) -> Table:
    path = Path(path)
    if not path.is_file():
        raise ContractError(f"{path}: no such file")
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != f"# schema: {CSV_SCHEMA}":
        found = lines[0].strip() if lines else "<empty file>"
        raise ContractError(
            f"{path}: first line must be '# schema: {CSV_SCHEMA}', "
            f"got {found!r}")
    if len(lines) < 2:
        raise ContractError(f"{path}: header row missing")
    names = tuple(s.strip() for s in lines[1].split(","))
    if any(not n for n in names):
        raise ContractError(f"{path}: blank column name in header")
    body = "\n".join(lines[2:])
    if body.strip():
        try:
            data = np.loadtxt(StringIO(body), delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ContractError(f"{path}: {exc}") from None
    else:
        data = np.empty((0, len(names)))
    if data.shape[1] != len(names):
        raise ContractError(
            f"{path}: rows carry {data.shape[1]} values under "
            f"{len(names)} header names")
    return Table(path=path, names=names, data=data)
