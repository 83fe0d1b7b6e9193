"""CSV reading and writing of sample matrices (rows = observations)."""

import csv

import numpy as np

__all__ = ["CsvFormatError", "read_points_csv", "write_points_csv"]


class CsvFormatError(ValueError):
    pass


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_points_csv(path):
    """Read a comma-separated numeric matrix.

    A first row containing any non-numeric cell is treated as a header.
    Blank lines are skipped.  Returns ``(data, header)`` where *header* is a
    list of column names or None.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if any(c.strip() for c in r)]
    if not rows:
        raise CsvFormatError("no observations")
    header = None
    if not all(_is_number(c) for c in rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise CsvFormatError("no observations")
    width = len(header) if header is not None else len(rows[0][1])
    data = np.empty((len(rows), width))
    for j, (line, row) in enumerate(rows):
        if len(row) != width:
            raise CsvFormatError(f"line {line}: expected {width} columns, found {len(row)}")
        for c, cell in enumerate(row):
            try:
                data[j, c] = float(cell)
            except ValueError:
                raise CsvFormatError(
                    f"line {line}, column {c + 1}: non-numeric value {cell.strip()!r}"
                ) from None
    if not np.all(np.isfinite(data)):
        raise CsvFormatError("non-finite value (nan or inf) in data")
    return data, header


def write_points_csv(path, data, header=None):
    """Write *data* with full-precision float formatting (round-trips exactly)."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in data:
            writer.writerow([repr(float(v)) for v in row])
