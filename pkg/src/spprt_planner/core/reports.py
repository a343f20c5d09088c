"""
Report writers: JSON documents and CSV plot data, both written atomically.
"""

import csv
import io
import json
import logging
import math
import os
import tempfile
from typing import Any, Dict, Iterable, Sequence

logger = logging.getLogger(__name__)


def atomic_write_text(path: str, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise
    logger.debug(f"Wrote {path}")


def jsonable(value: Any) -> Any:
    """Recursively replace non-finite floats by None and tuples by lists."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, 'item') and callable(value.item):
        # numpy scalars
        return jsonable(value.item())
    return value


def dumps(data: Any) -> str:
    return json.dumps(jsonable(data), indent=2, allow_nan=False) + "\n"


def write_json(path: str, data: Any) -> str:
    atomic_write_text(path, dumps(data))
    return path


def csv_text(columns: Sequence[str], rows: Iterable[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if row.get(c) is None else _cell(row.get(c)) for c in columns])
    return buffer.getvalue()


def _cell(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ""
    return value


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Dict[str, Any]]) -> str:
    """CSV with a header row and the given fixed column order."""
    atomic_write_text(path, csv_text(columns, rows))
    return path
