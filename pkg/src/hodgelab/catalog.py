"""Built-in meshes with pinned coordinates.

Names: ``interval``, ``circle[-n]``, ``triangle``, ``square[-n]``,
``disk``, ``annulus[-NxK]``, ``torus[-NxM]``, ``torus7``, ``sphere``.
"""

from __future__ import annotations

import math
import re

from .complex import build_complex
from .meshio import Mesh
from .metric import Geometry

CATALOG_NAMES = ("interval", "circle-n", "triangle", "square", "square-n", "disk",
                 "annulus-NxK", "torus-NxM", "torus7", "sphere")


def interval() -> Mesh:
    cx = build_complex([(0, 1), (1, 2)])
    geom = Geometry.from_mapping({0: [0.0], 1: [0.5], 2: [1.0]})
    return Mesh(cx, geom, name="interval")


def circle(n: int = 3) -> Mesh:
    if n < 3:
        raise ValueError("circle needs at least 3 vertices")
    cx = build_complex([(i, (i + 1) % n) for i in range(n)])
    pts = {i: [math.cos(2 * math.pi * i / n), math.sin(2 * math.pi * i / n)] for i in range(n)}
    return Mesh(cx, Geometry.from_mapping(pts), name=f"circle-{n}")


def triangle() -> Mesh:
    """Equilateral triangle with unit sides."""
    cx = build_complex([(0, 1, 2)])
    geom = Geometry.from_mapping({0: [0.0, 0.0], 1: [1.0, 0.0], 2: [0.5, math.sqrt(3) / 2]})
    return Mesh(cx, geom, name="triangle")


def square(n: int = 1) -> Mesh:
    """Unit square, ``n x n`` cells each split along the main diagonal."""
    vid = lambda i, j: j * (n + 1) + i  # noqa: E731
    tops = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tops += [(a, b, c), (a, c, d)]
    pts = {vid(i, j): [i / n, j / n] for j in range(n + 1) for i in range(n + 1)}
    return Mesh(build_complex(tops), Geometry.from_mapping(pts),
                name="square" if n == 1 else f"square-{n}")


def disk(sides: int = 6) -> Mesh:
    """Regular polygon fanned from an interior centre vertex 0."""
    tops = [(0, 1 + i, 1 + (i + 1) % sides) for i in range(sides)]
    pts = {0: [0.0, 0.0]}
    pts.update({1 + i: [math.cos(2 * math.pi * i / sides), math.sin(2 * math.pi * i / sides)]
                for i in range(sides)})
    return Mesh(build_complex(tops), Geometry.from_mapping(pts), name="disk")


def annulus(n: int = 8, k: int = 2) -> Mesh:
    """``n`` angular cells, ``k`` radial layers; inner radius 1, outer 2.

    Inner-circle vertices carry the smallest ids, so boundary component
    0 is the inner circle.
    """
    vid = lambda r, i: r * n + (i % n)  # noqa: E731
    tops = []
    for r in range(k):
        for i in range(n):
            tops += [(vid(r, i), vid(r, i + 1), vid(r + 1, i + 1)),
                     (vid(r, i), vid(r + 1, i + 1), vid(r + 1, i))]
    pts = {}
    for r in range(k + 1):
        rad = 1.0 + r / k
        for i in range(n):
            t = 2 * math.pi * i / n
            pts[vid(r, i)] = [rad * math.cos(t), rad * math.sin(t)]
    return Mesh(build_complex(tops), Geometry.from_mapping(pts), name=f"annulus-{n}x{k}")


def torus(n: int = 8, m: int | None = None) -> Mesh:
    """Flat unit torus, ``n x m`` grid split along diagonals, periodic coordinates."""
    m = n if m is None else m
    if n < 3 or m < 3:
        raise ValueError("flat torus grid needs at least 3 cells per direction")
    vid = lambda i, j: (j % m) * n + (i % n)  # noqa: E731
    tops = []
    for j in range(m):
        for i in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tops += [(a, b, c), (a, c, d)]
    pts = {vid(i, j): [i / n, j / m] for j in range(m) for i in range(n)}
    return Mesh(build_complex(tops), Geometry.from_mapping(pts, period=[1.0, 1.0]),
                name=f"torus-{n}x{m}")


def torus7() -> Mesh:
    """Seven-vertex (Moebius-Kantor) torus; combinatorial only."""
    tops = []
    for i in range(7):
        tops.append((i, (i + 1) % 7, (i + 3) % 7))
        tops.append((i, (i + 2) % 7, (i + 3) % 7))
    return Mesh(build_complex(tops), None, name="torus7")


def sphere() -> Mesh:
    """Boundary of the octahedron in R^3."""
    pts = {0: [1.0, 0, 0], 1: [-1.0, 0, 0], 2: [0, 1.0, 0], 3: [0, -1.0, 0],
           4: [0, 0, 1.0], 5: [0, 0, -1.0]}
    tops = [(x, y, z) for x in (0, 1) for y in (2, 3) for z in (4, 5)]
    return Mesh(build_complex(tops), Geometry.from_mapping(pts), name="sphere")


def load(name: str) -> Mesh:
    """Look up a catalog mesh by name, e.g. ``torus-8x8`` or ``annulus-12x3``."""
    key = name.strip().lower().replace("×", "x")
    fixed = {"interval": interval, "triangle": triangle, "disk": disk,
             "sphere": sphere, "torus7": torus7, "square": square}
    if key in fixed:
        return fixed[key]()
    if key == "circle":
        return circle()
    if key == "annulus":
        return annulus()
    if key == "torus":
        return torus()
    if mt := re.fullmatch(r"circle-(\d+)", key):
        return circle(int(mt.group(1)))
    if mt := re.fullmatch(r"square-(\d+)", key):
        return square(int(mt.group(1)))
    if mt := re.fullmatch(r"annulus-(\d+)x(\d+)", key):
        return annulus(int(mt.group(1)), int(mt.group(2)))
    if mt := re.fullmatch(r"torus-(\d+)(?:x(\d+))?", key):
        return torus(int(mt.group(1)), int(mt.group(2)) if mt.group(2) else None)
    raise KeyError(f"unknown catalog mesh {name!r}; known: {', '.join(CATALOG_NAMES)}")


__all__ = ["load", "CATALOG_NAMES", "interval", "circle", "triangle", "square", "disk",
           "annulus", "torus", "torus7", "sphere"]
