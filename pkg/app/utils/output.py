"""CSV / JSON writers for command tables"""
from typing import Any, Dict, Optional, TextIO
import csv
import io
import json
import math
import sys

from app.schemas.schema import Table


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    return value


def table_to_csv(table: Table) -> str:
    """'# key: value' metadata lines, a header row, then rows with repr floats"""
    buf = io.StringIO()
    for key, value in table.metadata.items():
        buf.write(f"# {key}: {_cell(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def table_to_json(table: Table) -> str:
    doc = {"metadata": table.metadata, "columns": table.columns, "rows": table.rows}
    return json.dumps(json_safe(doc), indent=2) + "\n"


def render(table: Table, fmt: str = "csv") -> str:
    if fmt == "csv":
        return table_to_csv(table)
    if fmt == "json":
        return table_to_json(table)
    raise ValueError(f"Unknown output format '{fmt}'")


def write_text(text: str, path: Optional[str] = None, stream: Optional[TextIO] = None) -> None:
    """Write to `path`, or to `stream` (stdout by default)"""
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        (stream or sys.stdout).write(text)


def dump_json(doc: Dict[str, Any]) -> str:
    return json.dumps(json_safe(doc), indent=2, sort_keys=True) + "\n"
