"""CSV emission and parsing for metric records.

Floats are written with 17 significant digits so that parsing a file gives
back exactly the numbers that were written.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence


def format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    return str(x)


def parse_value(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def dumps(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(x) for x in row])
    return buf.getvalue()


def loads(text: str) -> tuple[list[str], list[list]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV") from None
    return header, [[parse_value(x) for x in row] for row in reader if row]


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(header, rows))
    return path


def read_csv(path) -> tuple[list[str], list[list]]:
    return loads(Path(path).read_text())


def read_records(path) -> list[dict]:
    header, rows = read_csv(path)
    return [dict(zip(header, row)) for row in rows]
