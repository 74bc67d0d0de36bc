"""Benchmark input columns: seeded generators and .tbl/.csv readers."""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass

from .errors import DataError, ParameterError

PSIZE_MIN, PSIZE_MAX = 1, 50


def gen_random(n_bits: int, row_count: int, seed: int | None = None) -> list[int]:
    """Uniform integers in ``[0, 2**n_bits)``, reproducible under ``seed``."""
    if not 1 <= n_bits <= 64:
        raise ParameterError(f"n_bits must be in [1, 64], got {n_bits}")
    if row_count < 0:
        raise ParameterError(f"row_count must be >= 0, got {row_count}")
    rng = random.Random(seed)
    return [rng.getrandbits(n_bits) for _ in range(row_count)]


def gen_psize_like(row_count: int, seed: int | None = None) -> list[int]:
    """Uniform integers in [1, 50], the range of a part-size column."""
    if row_count < 0:
        raise ParameterError(f"row_count must be >= 0, got {row_count}")
    rng = random.Random(seed)
    return [rng.randint(PSIZE_MIN, PSIZE_MAX) for _ in range(row_count)]


def read_csv_column(path: str, column_index: int, delimiter: str = "|",
                    n_bits: int | None = None) -> list[int]:
    """Non-negative integer column from a delimited file, in file order.

    The default delimiter matches dbgen-style ``.tbl`` output (trailing
    delimiter included). Rows in error messages are 1-based.
    """
    values: list[int] = []
    limit = None if n_bits is None else 1 << n_bits
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open column file {path}: {exc}") from exc
    with handle:
        for lineno, row in enumerate(csv.reader(handle, delimiter=delimiter), start=1):
            if not row:
                continue
            if column_index >= len(row):
                raise DataError(
                    f"{path}: row {lineno} has {len(row)} fields, "
                    f"no column {column_index}"
                )
            cell = row[column_index].strip()
            try:
                v = int(cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {lineno}, column {column_index}: "
                    f"{cell!r} is not an integer"
                ) from None
            if v < 0:
                raise DataError(f"{path}: row {lineno}: negative value {v}")
            if limit is not None and v >= limit:
                raise DataError(
                    f"{path}: row {lineno}: value {v} >= 2**{n_bits}"
                )
            values.append(v)
    return values


def write_column(path: str, values: list[int], delimiter: str = "|") -> None:
    """Write one value per row in the same delimited format the reader takes."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, delimiter=delimiter)
        for v in values:
            writer.writerow([v])


@dataclass(frozen=True)
class ColumnSource:
    """Declarative description of a benchmark input column."""

    kind: str  # "random" | "csv" | "psize"
    n_bits: int
    row_count: int
    seed: int | None = None
    path: str | None = None
    column: int = 0
    delimiter: str = "|"

    def __post_init__(self) -> None:
        if self.kind not in ("random", "csv", "psize"):
            raise ParameterError(f"unknown source kind {self.kind!r}")
        if self.kind == "psize" and (1 << self.n_bits) <= PSIZE_MAX:
            raise ParameterError(
                f"psize values reach {PSIZE_MAX}; n_bits={self.n_bits} is too small"
            )
        if self.kind == "csv" and not self.path:
            raise ParameterError("csv source requires a path")

    def load(self) -> list[int]:
        """Materialize the column. Deterministic for generated kinds."""
        if self.kind == "random":
            return gen_random(self.n_bits, self.row_count, self.seed)
        if self.kind == "psize":
            return gen_psize_like(self.row_count, self.seed)
        values = read_csv_column(self.path, self.column, self.delimiter,
                                 n_bits=self.n_bits)
        if self.row_count and len(values) > self.row_count:
            return values[: self.row_count]
        return values
