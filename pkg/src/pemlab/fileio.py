"""On-disk formats: key files, point and half-plane files, hull output.

Keys travel either as a binary little-endian signed 64-bit word file or
as a one-integer-per-line text file.  Geometry files are line oriented
with exact rationals (``fractions.Fraction`` syntax, e.g. ``3/4`` or
``-2``): points are ``x y`` pairs, half-planes are ``a b c`` triples
meaning ``a*x + b*y <= c``, and hull output is one ``x y`` vertex per
line, counterclockwise from the lexicographically smallest vertex.
"""
from __future__ import annotations

import struct
from fractions import Fraction
from pathlib import Path

from pemlab.machine import MachineFault

__all__ = [
    "read_keys",
    "read_planes",
    "read_points",
    "write_hull",
    "write_keys",
    "write_planes",
    "write_points",
]

_WORD = struct.Struct("<q")


def read_keys(path, binary: bool = False) -> list:
    """Load integer keys from ``path`` (text lines or binary LE int64)."""
    if binary:
        blob = Path(path).read_bytes()
        if len(blob) % _WORD.size:
            raise MachineFault(
                f"binary key file length {len(blob)} is not a multiple "
                f"of {_WORD.size}")
        return [v for (v,) in _WORD.iter_unpack(blob)]
    keys = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        try:
            keys.append(int(line))
        except ValueError:
            raise MachineFault(f"bad key on line {lineno}: {raw!r}") from None
    return keys


def write_keys(path, keys, binary: bool = False) -> None:
    """Write integer keys to ``path`` in the chosen key-file format."""
    if binary:
        Path(path).write_bytes(b"".join(_WORD.pack(int(k)) for k in keys))
        return
    Path(path).write_text("".join(f"{int(k)}\n" for k in keys))


def _parse_rationals(path, count: int, what: str) -> list:
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != count:
            raise MachineFault(
                f"{what} on line {lineno} needs {count} fields: {raw!r}")
        try:
            rows.append(tuple(Fraction(part) for part in parts))
        except (ValueError, ZeroDivisionError):
            raise MachineFault(
                f"bad rational in {what} on line {lineno}: {raw!r}") from None
    return rows


def read_points(path) -> list:
    """Load ``x y`` rational pairs, one point per line."""
    return _parse_rationals(path, 2, "point")


def write_points(path, points) -> None:
    Path(path).write_text(
        "".join(f"{Fraction(p[0])} {Fraction(p[1])}\n" for p in points))


def read_planes(path) -> list:
    """Load ``a b c`` rational triples (``a*x + b*y <= c``) per line."""
    return _parse_rationals(path, 3, "half-plane")


def write_planes(path, planes) -> None:
    Path(path).write_text(
        "".join(f"{Fraction(h[0])} {Fraction(h[1])} {Fraction(h[2])}\n"
                for h in planes))


def write_hull(path, chain) -> None:
    """Write hull vertices, counterclockwise from the lexicographically
    smallest vertex (the canonical chain order)."""
    write_points(path, chain.vertices)
