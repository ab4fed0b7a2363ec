"""Point files, shape descriptions and CSV output.

Point files hold one point per line, coordinates separated by whitespace or
commas. Blank lines and lines starting with ``#`` are skipped.

Shape descriptions are JSON objects with a ``type`` key::

    {"type": "cloud", "points": [[0, 0], [1, 0]]}     or  {"type": "cloud", "file": "pts.xyz"}
    {"type": "ball", "center": [0, 0, 0], "radius": 1}
    {"type": "box", "lo": [0, 0, 0], "hi": [1, 1, 1]}
    {"type": "segments", "segments": [[[0, 0], [1, 0]], ...]}
    {"type": "union", "members": [<shape>, ...]}
    {"type": "comb", "teeth": 8, "step": 0.05, "length": 1.0}

Unknown keys are rejected.
"""

import os
import re

import numpy as np

from .errors import InputError
from .shapes import Ball, Box, Cloud, SegmentSet, Union, comb

_SPLIT = re.compile(r"[,\s]+")


def parse_points(text, source="<input>"):
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        fields = [f for f in _SPLIT.split(s) if f]
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise InputError(f"line {lineno}: invalid number") from None
        if not all(np.isfinite(row)):
            raise InputError(f"line {lineno}: non-finite coordinate")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputError(f"line {lineno}: expected {width} coordinates, got {len(row)}")
        rows.append(row)
    if not rows:
        raise InputError(f"{source}: empty compact set")
    return np.array(rows, dtype=float)


def read_points(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_points(text, str(path))


_SHAPE_KEYS = {
    "cloud": ({"type"}, {"points", "file"}),
    "ball": ({"type", "center", "radius"}, set()),
    "box": ({"type", "lo", "hi"}, set()),
    "segments": ({"type", "segments"}, set()),
    "union": ({"type", "members"}, set()),
    "comb": ({"type"}, {"teeth", "step", "length"}),
}


def shape_from_config(spec, base_dir="."):
    if not isinstance(spec, dict) or "type" not in spec:
        raise InputError("shape must be an object with a 'type' key")
    kind = spec["type"]
    if kind not in _SHAPE_KEYS:
        raise InputError(f"unknown shape type {kind!r}")
    required, optional = _SHAPE_KEYS[kind]
    unknown = set(spec) - required - optional
    if unknown:
        raise InputError(f"unknown keys for {kind}: {', '.join(sorted(unknown))}")
    missing = required - set(spec)
    if missing:
        raise InputError(f"missing keys for {kind}: {', '.join(sorted(missing))}")
    try:
        if kind == "cloud":
            if ("points" in spec) == ("file" in spec):
                raise InputError("cloud needs exactly one of 'points' or 'file'")
            if "file" in spec:
                return Cloud(read_points(os.path.join(base_dir, spec["file"])))
            return Cloud(np.asarray(spec["points"], dtype=float))
        if kind == "ball":
            return Ball(spec["center"], spec["radius"])
        if kind == "box":
            return Box(spec["lo"], spec["hi"])
        if kind == "segments":
            return SegmentSet(spec["segments"])
        if kind == "union":
            return Union([shape_from_config(m, base_dir) for m in spec["members"]])
        return comb(**{k: spec[k] for k in ("teeth", "step", "length") if k in spec})
    except InputError:
        raise
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid {kind}: {exc}") from None


def fmt(x):
    """Locale-independent, round-trip safe float formatting."""
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")


def read_csv(path):
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    return header, np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(header))
