"""Atomic file output and fixed-precision number formatting."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

SIG_DIGITS = 9


def fmt(x: float) -> str:
    return format(float(x), f".{SIG_DIGITS}g")


def round_sig(x: float) -> float:
    return float(fmt(x)) if math.isfinite(x) else x


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def csv_text(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    atomic_write_text(path, csv_text(header, rows))


def _rounded(obj):
    if isinstance(obj, float):
        return round_sig(obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def json_text(obj) -> str:
    """Deterministic JSON with every float cut to 9 significant digits."""
    return json.dumps(_rounded(obj), indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, obj) -> None:
    atomic_write_text(path, json_text(obj))
