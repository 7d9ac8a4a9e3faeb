"""Versioned on-disk formats: JSONL traces, CSV samples, JSON run records.

Floats cross the disk boundary through repr-faithful formatting, so reading
back a file reproduces the in-memory values bit for bit and determinism
checks can compare files directly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

# Sample CSVs open with one comment line carrying the schema version, so the
# data header itself stays a plain column row for any CSV reader.
_CSV_VERSION_PREFIX = "# schema_version="


def write_trace_jsonl(path: Path, trace) -> None:
    """One header object, then one object per iteration record."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        header = {"schema_version": SCHEMA_VERSION, "rows": len(trace)}
        handle.write(json.dumps(header) + "\n")
        for record in trace:
            row = record.to_dict() if hasattr(record, "to_dict") else dict(record)
            handle.write(json.dumps(row) + "\n")


def read_trace_jsonl(path: Path) -> list[dict]:
    with Path(path).open("r", encoding="utf-8") as handle:
        lines = [json.loads(line) for line in handle if line.strip()]
    if not lines or "schema_version" not in lines[0]:
        raise ValueError(f"{path} is not a trace file")
    if lines[0]["schema_version"] != SCHEMA_VERSION:
        raise ValueError(f"unsupported trace schema in {path}")
    return lines[1:]


def write_samples_csv(path: Path, samples) -> None:
    """Coordinates, log ratio, and weight per evaluated point."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    points = np.atleast_2d(samples.points)
    dim = points.shape[1]
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"{_CSV_VERSION_PREFIX}{SCHEMA_VERSION}\n")
        writer = csv.writer(handle)
        writer.writerow(
            [f"theta_{axis}" for axis in range(dim)] + ["log_ratio", "weight"]
        )
        for row in range(points.shape[0]):
            writer.writerow(
                [repr(float(value)) for value in points[row]]
                + [
                    repr(float(samples.log_ratios[row])),
                    repr(float(samples.weights[row])),
                ]
            )


def read_samples_csv(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points, log ratios, and weights, exactly as written."""
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        first = handle.readline()
        if not first.startswith(_CSV_VERSION_PREFIX):
            raise ValueError(f"{path} is missing its schema version")
        if int(first[len(_CSV_VERSION_PREFIX) :]) != SCHEMA_VERSION:
            raise ValueError(f"unsupported samples schema in {path}")
        reader = csv.reader(handle)
        header = next(reader)
        dim = len(header) - 2
        rows = [[float(cell) for cell in row] for row in reader if row]
    table = np.asarray(rows, dtype=float)
    return table[:, :dim], table[:, dim], table[:, dim + 1]


def write_run_record(path: Path, record: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if record.get("schema_version") != SCHEMA_VERSION:
        raise ValueError("run record must carry the current schema version")
    with path.open("w", encoding="utf-8") as handle:
        json.dump(record, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_run_record(path: Path) -> dict:
    with Path(path).open("r", encoding="utf-8") as handle:
        record = json.load(handle)
    if record.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported run record schema in {path}")
    return record


def write_plot_csv(path: Path, columns: dict[str, np.ndarray]) -> None:
    """Aligned plot columns, first key treated as the x axis."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    length = len(columns[names[0]])
    if any(len(columns[name]) != length for name in names):
        raise ValueError("plot columns must share one length")
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"{_CSV_VERSION_PREFIX}{SCHEMA_VERSION}\n")
        writer = csv.writer(handle)
        writer.writerow(names)
        for row in range(length):
            writer.writerow([repr(float(columns[name][row])) for name in names])


def read_plot_csv(path: Path) -> dict[str, np.ndarray]:
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        first = handle.readline()
        if not first.startswith(_CSV_VERSION_PREFIX):
            raise ValueError(f"{path} is missing its schema version")
        reader = csv.reader(handle)
        names = next(reader)
        rows = [[float(cell) for cell in row] for row in reader if row]
    table = np.asarray(rows, dtype=float)
    return {name: table[:, index] for index, name in enumerate(names)}
