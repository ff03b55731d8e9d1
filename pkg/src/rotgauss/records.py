"""JSON-lines box records and deterministic CSV output."""

from __future__ import annotations

import csv
import io
import json

from .boxes import BoxDefinition, RBox2D, RBox3D


def fmt(value) -> str:
    """9 significant digits, locale independent."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "__float__"):
        v = float(value)
        if v == 0.0:
            return "0"
        return format(v, ".9g")
    return str(value)


def box_from_record(d: dict, definition=BoxDefinition.LONG_EDGE, degrees: bool = False):
    """A 3-D box when the record has ``z`` and ``l``, else a 2-D box."""
    if "z" in d and "l" in d:
        return RBox3D.from_dict(d, degrees=degrees)
    return RBox2D.from_dict(d, definition=definition, degrees=degrees)


def read_jsonl(path) -> list:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return rows


def read_box_file(path, definition=BoxDefinition.LONG_EDGE, degrees: bool = False) -> list:
    """Boxes from a ``.json`` (object or list) or ``.jsonl`` file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = read_jsonl(path)
    if isinstance(data, dict):
        data = [data]
    return [box_from_record(d, definition, degrees) for d in data]


def read_pairs(path, definition=BoxDefinition.LONG_EDGE, degrees: bool = False) -> list:
    """``(pred, target)`` pairs from JSON lines with ``pred``/``target`` (or ``a``/``b``) keys."""
    pairs = []
    for rec in read_jsonl(path):
        a = rec.get("pred", rec.get("a"))
        b = rec.get("target", rec.get("b"))
        if a is None or b is None:
            raise ValueError("pair record needs 'pred' and 'target' keys")
        pairs.append((box_from_record(a, definition, degrees),
                      box_from_record(b, definition, degrees)))
    return pairs


def box_to_record(box) -> dict:
    d = box.to_dict()
    return {k: (float(v) if isinstance(v, float) or hasattr(v, "dtype") else v) for k, v in d.items()}


def write_csv(header, rows, fh=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text

