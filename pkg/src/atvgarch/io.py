"""Serialization helpers shared by the command-line surface.

All floating-point output uses Python's shortest round-trip repr, so a
written CSV reads back to the exact same doubles.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError

__version__ = "0.1.0"


def fmt(value) -> str:
    """Shortest decimal string that round-trips the double exactly."""
    return repr(float(value))


def write_matrix_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row])


def write_summary_csv(path, means: dict[str, float], sds: dict[str, float]) -> None:
    rows = [[name, means[name], sds[name]] for name in means]
    write_matrix_csv(path, ["parameter", "mean", "sd"], rows)


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(path, subcommand: str, config: dict, runtime_seconds: float) -> None:
    write_json(
        path,
        {
            "tool": "atvgarch",
            "version": __version__,
            "subcommand": subcommand,
            "config": config,
            "runtime_seconds": runtime_seconds,
        },
    )


def read_series_csv(path, column: str, require_positive: bool = False) -> np.ndarray:
    """Read one numeric column; errors carry the offending row number."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file {path} does not exist")
    values = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidConfigError(f"{path}: empty file") from None
        if column not in header:
            raise InvalidConfigError(
                f"{path}: no column {column!r}; available: {header}"
            )
        idx = header.index(column)
        for row_no, row in enumerate(reader, start=2):
            if len(row) <= idx:
                raise InvalidConfigError(f"{path}: row {row_no} is too short")
            try:
                v = float(row[idx])
            except ValueError:
                raise InvalidConfigError(
                    f"{path}: row {row_no}: {row[idx]!r} is not a number"
                ) from None
            if require_positive and v <= 0.0:
                raise InvalidConfigError(f"{path}: row {row_no}: price must be positive")
            values.append(v)
    if not values:
        raise InvalidConfigError(f"{path}: no data rows")
    return np.asarray(values)


def load_config_file(path, allowed_keys: set[str]) -> dict:
    """Parse a flat TOML-style key = value file; unknown keys are rejected."""
    import tomllib

    text = Path(path).read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfigError(f"{path}: {exc}") from None
    unknown = set(data) - allowed_keys
    if unknown:
        raise InvalidConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return data
