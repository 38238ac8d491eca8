"""Plain-text mesh format.

One record per line, ``#`` starts a comment::

    period <p1> ... <pd>      optional, per-axis period (0 = not periodic)
    v <id> <x> <y> ...        vertex with (optional) coordinates
    s <v0> ... <vm>           top simplex
    m1 <v0> ... <v_{m-1}>     boundary facet in the relative part
    m2 <v0> ... <v_{m-1}>     boundary facet in the absolute part
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex import BoundaryLabeling, SimplicialComplex, build_complex, labeling_from_facets
from .errors import ComplexError, MeshParseError
from .metric import Geometry


@dataclass
class Mesh:
    complex: SimplicialComplex
    geometry: Geometry | None = None
    m1_facets: list = field(default_factory=list)
    m2_facets: list = field(default_factory=list)
    name: str = ""

    def file_labels(self) -> BoundaryLabeling:
        """Labeling from the ``m1``/``m2`` records (unlisted boundary goes to M2)."""
        m2 = self.m2_facets if self.m2_facets else None
        return labeling_from_facets(self.complex, self.m1_facets, m2)


def _columns(line: str):
    col = 0
    for tok in line.split():
        col = line.index(tok, col)
        yield tok, col + 1
        col += len(tok)


def parse_mesh(text: str, name: str = "") -> Mesh:
    vertices = {}
    tops = []
    m1, m2 = [], []
    period = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = list(_columns(line))
        if not toks:
            continue
        key, _ = toks[0]

        def ints(items):
            out = []
            for tok, col in items:
                try:
                    out.append(int(tok))
                except ValueError:
                    raise MeshParseError(f"expected integer, got {tok!r}", lineno, col) from None
            return out

        def floats(items):
            out = []
            for tok, col in items:
                try:
                    out.append(float(tok))
                except ValueError:
                    raise MeshParseError(f"expected number, got {tok!r}", lineno, col) from None
            return out

        if key == "v":
            if len(toks) < 2:
                raise MeshParseError("vertex record needs an id", lineno, len(line) + 1)
            vid = ints(toks[1:2])[0]
            if vid in vertices:
                raise MeshParseError(f"duplicate vertex id {vid}", lineno, toks[1][1])
            vertices[vid] = floats(toks[2:])
        elif key == "s":
            if len(toks) < 2:
                raise MeshParseError("simplex record needs vertices", lineno, len(line) + 1)
            tops.append((tuple(ints(toks[1:])), lineno))
        elif key in ("m1", "m2"):
            (m1 if key == "m1" else m2).append((tuple(ints(toks[1:])), lineno))
        elif key == "period":
            period = floats(toks[1:])
        else:
            raise MeshParseError(f"unknown record type {key!r}", lineno, toks[0][1])

    if not tops:
        raise MeshParseError("mesh has no simplices")
    for simplex, lineno in tops:
        unknown = [v for v in simplex if vertices and v not in vertices]
        if unknown:
            raise MeshParseError(f"simplex uses undeclared vertex {unknown[0]}", lineno)
    try:
        cx = build_complex([s for s, _ in tops])
    except ComplexError as exc:
        raise MeshParseError(str(exc)) from exc

    geom = None
    dims = {len(c) for c in vertices.values()}
    if vertices and dims != {0}:
        if len(dims) != 1:
            raise MeshParseError("vertices have inconsistent coordinate counts")
        geom = Geometry.from_mapping(vertices, period)
    mesh = Mesh(cx, geom, [s for s, _ in m1], [s for s, _ in m2], name)
    for facets in (m1, m2):
        for s, lineno in facets:
            if len(s) != cx.dim:
                raise MeshParseError(f"label {s} is not a facet of a {cx.dim}-complex", lineno)
            try:
                cx.index(s)
            except ComplexError as exc:
                raise MeshParseError(str(exc), lineno) from None
    return mesh


def read_mesh(path) -> Mesh:
    with open(path, encoding="utf-8") as fh:
        return parse_mesh(fh.read(), name=str(path))


def _fmt(x: float) -> str:
    return repr(float(x))


def format_mesh(cx: SimplicialComplex, geom: Geometry | None = None,
                labels: BoundaryLabeling | None = None, comment: str = "") -> str:
    """Serialize in canonical order; requires a genuine simplicial complex."""
    if not cx.is_simplicial:
        raise ComplexError("glued cell complex has repeated vertex sets; "
                           "the mesh format cannot represent it")
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    if geom is not None and geom.period is not None:
        lines.append("period " + " ".join(_fmt(p) for p in geom.period))
    for vid in cx.vertex_ids:
        if geom is None:
            lines.append(f"v {vid}")
        else:
            pt = geom.points(np.array([vid]))[0]
            lines.append(f"v {vid} " + " ".join(_fmt(c) for c in pt))
    for s in cx.simplices[cx.dim]:
        lines.append("s " + " ".join(str(int(v)) for v in s))
    if labels is not None and cx.dim >= 1:
        for key, masks in (("m1", labels.m1), ("m2", labels.m2)):
            for j in np.flatnonzero(masks[cx.dim - 1]):
                lines.append(key + " " + " ".join(str(int(v)) for v in cx.simplices[cx.dim - 1][j]))
    return "\n".join(lines) + "\n"


def write_mesh(path, cx, geom=None, labels=None, comment="") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_mesh(cx, geom, labels, comment))

