"""File formats: UTF-8 CSV with a header row, '.' decimal, empty cell =
missing; JSON with sorted keys. Floats are written with repr, the shortest
digit string that round-trips, so outputs are byte-stable across runs."""

from __future__ import annotations

import csv
import json

import numpy as np

from .data import Dataset

__all__ = [
    "format_cell",
    "write_csv",
    "write_json",
    "read_dataset_csv",
    "write_dataset_csv",
]


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        raise ValueError("boolean cells are not part of any schema")
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])


def _json_default(obj):
    # numpy integer scalars are not json-serializable; unwrap any scalar
    item = getattr(obj, "item", None)
    if callable(item):
        return item()
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def read_dataset_csv(
    path: str, outcome: str, exposure: str, confounders
) -> tuple[Dataset, int, int]:
    """Load a dataset, keeping complete cases only.

    Returns (dataset, rows read, rows dropped). A cell is missing when empty
    or non-finite; rows with any missing mapped cell are dropped. Non-numeric
    non-empty cells are an error, as are a non-binary or single-level
    exposure column and an empty complete-case set.
    """
    confounders = tuple(confounders)
    wanted = (outcome, exposure, *confounders)
    if len(set(wanted)) != len(wanted):
        raise ValueError("outcome, exposure, and confounder columns must be distinct")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file (a header row is required)") from None
        head = [h.strip() for h in head]
        missing_cols = [c for c in wanted if c not in head]
        if missing_cols:
            raise ValueError(
                f"{path}: missing columns {', '.join(missing_cols)}; header has {', '.join(head)}"
            )
        positions = [head.index(c) for c in wanted]
        kept_rows = []
        n_input = 0
        n_dropped = 0
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            n_input += 1
            values = []
            complete = True
            for col, pos in zip(wanted, positions):
                if pos >= len(row):
                    raise ValueError(f"{path}: line {line_no} has too few fields")
                cell = row[pos].strip()
                if not cell:
                    complete = False
                    break
                try:
                    parsed = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: line {line_no}, column {col!r}: cannot parse {cell!r}"
                    ) from None
                if not np.isfinite(parsed):
                    complete = False
                    break
                values.append(parsed)
            if complete:
                kept_rows.append(values)
            else:
                n_dropped += 1
    if not kept_rows:
        raise ValueError(f"{path}: no complete cases among {n_input} rows")
    table = np.asarray(kept_rows)
    a = table[:, 1]
    if not np.all((a == 0.0) | (a == 1.0)):
        raise ValueError(f"{path}: exposure column {exposure!r} must be binary 0/1")
    if a.min() == a.max():
        raise ValueError(f"{path}: exposure column {exposure!r} has a single level")
    dataset = Dataset(table[:, 0], a, table[:, 2:], confounders)
    return dataset, n_input, n_dropped


def write_dataset_csv(
    path: str, dataset: Dataset, outcome: str = "y", exposure: str = "a"
) -> None:
    header = (outcome, exposure, *dataset.confounder_names)
    rows = (
        (dataset.outcome[i], dataset.exposure[i], *dataset.confounders[i])
        for i in range(dataset.n)
    )
    write_csv(path, header, rows)
