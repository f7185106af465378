"""Plain-text readers and writers for graphs, labels and results."""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import Graph, canonical

_SPLIT = re.compile(r"[,\s]+")


class ParseError(ValueError):
    """Malformed input; ``line`` is 1-based."""

    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def _records(path):
    """Yield ``(line_number, fields)`` for non-blank, non-comment lines."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, [t for t in _SPLIT.split(text) if t]


def _node(path, lineno, token: str, one_based: bool) -> int:
    try:
        v = int(token)
    except ValueError:
        raise ParseError(path, lineno, f"node id {token!r} is not an integer") from None
    v -= 1 if one_based else 0
    if v < 0:
        raise ParseError(path, lineno, f"node id {token!r} is negative"
                         + (" (ids are 1-based)" if one_based else ""))
    return v


def read_edge_list(path, one_based: bool = False, n: int | None = None) -> Graph:
    """Read ``i j [weight]`` lines. ``#`` starts a comment; commas or whitespace separate fields.

    The node count is ``max id + 1`` unless ``n`` is given.
    """
    edges: list[tuple[int, int]] = []
    weights: list[float] = []
    seen: dict[tuple[int, int], int] = {}
    weighted = None
    for lineno, fields in _records(path):
        if len(fields) not in (2, 3):
            raise ParseError(path, lineno, f"expected 'i j [weight]', got {len(fields)} fields")
        i = _node(path, lineno, fields[0], one_based)
        j = _node(path, lineno, fields[1], one_based)
        if i == j:
            raise ParseError(path, lineno, f"self-loop on node {fields[0]}")
        e = canonical((i, j))
        if e in seen:
            raise ParseError(path, lineno, f"duplicate edge (first seen on line {seen[e]})")
        seen[e] = lineno
        has_w = len(fields) == 3
        if weighted is None:
            weighted = has_w
        elif weighted != has_w:
            raise ParseError(path, lineno, "mixed weighted and unweighted lines")
        if has_w:
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(path, lineno, f"weight {fields[2]!r} is not a number") from None
            if not np.isfinite(w) or w <= 0:
                raise ParseError(path, lineno, f"weight must be positive and finite, got {fields[2]}")
            weights.append(w)
        edges.append(e)
    top = max((max(e) for e in edges), default=-1) + 1
    if n is None:
        n = top
    elif n < top:
        raise ValueError(f"node count {n} is smaller than the largest id {top - 1}")
    return Graph(n, edges, weights if weighted else None)


def read_labels(path, n: int, one_based: bool = False) -> np.ndarray:
    """``node label`` lines; every node must be labelled exactly once."""
    labels = np.full(n, -1, dtype=np.int64)
    for lineno, fields in _records(path):
        if len(fields) != 2:
            raise ParseError(path, lineno, "expected 'node label'")
        if lineno == 1 and not fields[0].lstrip("-").isdigit():
            continue  # header
        v = _node(path, lineno, fields[0], one_based)
        if v >= n:
            raise ParseError(path, lineno, f"node {fields[0]} is not in the graph")
        try:
            lab = int(fields[1])
        except ValueError:
            raise ParseError(path, lineno, f"label {fields[1]!r} is not an integer") from None
        if lab < 0:
            raise ParseError(path, lineno, "labels must be non-negative")
        if labels[v] != -1:
            raise ParseError(path, lineno, f"node {fields[0]} labelled twice")
        labels[v] = lab
    missing = np.flatnonzero(labels < 0)
    if missing.size:
        raise ValueError(f"{path}: {missing.size} nodes have no label (first: {missing[0]})")
    return labels


def read_features(path, n: int, one_based: bool = False) -> np.ndarray:
    """``node x_1 ... x_d`` lines with a common width; a header line is optional."""
    rows: dict[int, list[float]] = {}
    width = None
    for lineno, fields in _records(path):
        if not rows and width is None and not fields[0].lstrip("-").isdigit():
            width = len(fields) - 1  # header
            continue
        v = _node(path, lineno, fields[0], one_based)
        if v >= n:
            raise ParseError(path, lineno, f"node {fields[0]} is not in the graph")
        try:
            vals = [float(t) for t in fields[1:]]
        except ValueError:
            raise ParseError(path, lineno, "feature values must be numbers") from None
        if width is None:
            width = len(vals)
        if len(vals) != width or not vals:
            raise ParseError(path, lineno, f"expected {width} feature values, got {len(vals)}")
        if v in rows:
            raise ParseError(path, lineno, f"node {fields[0]} listed twice")
        rows[v] = vals
    if len(rows) != n:
        raise ValueError(f"{path}: features given for {len(rows)} of {n} nodes")
    return np.array([rows[v] for v in range(n)], dtype=float)


# -- writers -------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def format_curvature(edges: Sequence, values, normalized=None, offset: int = 0) -> str:
    lines = []
    for k, (i, j) in enumerate(edges):
        row = [str(i + offset), str(j + offset), _fmt(values[k])]
        if normalized is not None:
            row.append(_fmt(normalized[k]))
        lines.append(" ".join(row))
    return "\n".join(lines) + ("\n" if lines else "")


def format_histogram(values, bins: int = 20, lo: float = -2.0, hi: float = 1.0) -> str:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=(lo, hi))
    out = ["bin_left,bin_right,count"]
    out += [f"{_fmt(a)},{_fmt(b)},{c}" for a, b, c in zip(edges[:-1], edges[1:], counts)]
    return "\n".join(out) + "\n"


def format_edge_list(edges: Iterable, weights=None, offset: int = 0) -> str:
    lines = []
    for k, (i, j) in enumerate(edges):
        row = f"{i + offset} {j + offset}"
        if weights is not None:
            row += f" {_fmt(weights[k])}"
        lines.append(row)
    return "\n".join(lines) + ("\n" if lines else "")


def format_coo(m, tol: float = 0.0) -> str:
    """``row col value`` for entries with ``|value| > tol``, row-major."""
    m = np.asarray(m, dtype=float)
    rows, cols = np.nonzero(np.abs(m) > tol)
    return "".join(f"{r} {c} {_fmt(m[r, c])}\n" for r, c in zip(rows.tolist(), cols.tolist()))


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
