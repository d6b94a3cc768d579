"""Serialization helpers shared by the CLI outputs."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from json import encoder as _json_encoder

import numpy as np


def fmt_double(x: float) -> str:
    """17 significant digits, always recognisable as a float."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialise non-finite value {x}")
    s = format(x, ".17g")
    return s if any(ch in s for ch in ".e") else s + ".0"


class _DoubleEncoder(json.JSONEncoder):
    # json.dumps writes floats with repr(); route them through fmt_double instead.
    def iterencode(self, o, _one_shot=False):
        quote = _json_encoder.py_encode_basestring_ascii if self.ensure_ascii else _json_encoder.py_encode_basestring
        return _json_encoder._make_iterencode(
            {} if self.check_circular else None,
            self.default,
            quote,
            self.indent,
            fmt_double,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            False,
        )(o, 0)

    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def dumps(obj) -> str:
    return json.dumps(obj, cls=_DoubleEncoder, indent=2) + "\n"


def versions() -> dict:
    from . import __version__

    return {"halton_cbc": __version__, "numpy": np.__version__, "python": platform.python_version()}


def csv_text(header: list[str], rows: list[list], metadata: dict | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_double(v) if isinstance(v, float) else v for v in row])
    text = buf.getvalue()
    if metadata:
        for key, value in metadata.items():
            text += f"# {key}: {json.dumps(value, sort_keys=True, separators=(',', ':'))}\n"
    return text
