"""Integer lattice model of the pre-Sierpinski gaskets.

A point is stored as an integer pair ``(a, b)`` together with a level ``n``;
it denotes ``(a * e_a + b * e_b) / 2**n`` with ``e_a = (1/2, sqrt(3)/2)`` and
``e_b = (1, 0)``.  The outer triangle has corners ``O = (0, 0)``,
``a = (2**n, 0)`` and ``b = (0, 2**n)`` at level ``n``.

Two regions are supported.  ``F`` is the level-n gasket together with its
mirror image across the line through O and a (the reflection is
``(a, b) -> (a, -a - b)``).  ``FV`` adds a further copy of the upper-right
gasket translated by ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

F = "F"
FV = "FV"
REGIONS = (F, FV)

SQRT3_2 = math.sqrt(3.0) / 2.0

Coord = tuple[int, int]


def _check_region(region: str) -> None:
    if region not in REGIONS:
        raise ValueError(f"unknown region {region!r}; expected one of {REGIONS}")


@dataclass(frozen=True, eq=False)
class VertexCoord:
    """Exact dyadic point of the triangular lattice."""

    a: int
    b: int
    level: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")

    def normalized(self) -> VertexCoord:
        a, b, n = self.a, self.b, self.level
        while n > 0 and a % 2 == 0 and b % 2 == 0:
            a //= 2
            b //= 2
            n -= 1
        return VertexCoord(a, b, n)

    def at_level(self, n: int) -> VertexCoord:
        """Same point expressed at level ``n``; raises if not representable."""
        if n >= self.level:
            s = 1 << (n - self.level)
            return VertexCoord(self.a * s, self.b * s, n)
        s = 1 << (self.level - n)
        if self.a % s or self.b % s:
            raise ValueError(f"{self} is not a level-{n} lattice point")
        return VertexCoord(self.a // s, self.b // s, n)

    @property
    def coord(self) -> Coord:
        return (self.a, self.b)

    def min_level(self) -> int:
        """Smallest level at which the point is a lattice point."""
        return self.normalized().level

    def __eq__(self, other):
        if not isinstance(other, VertexCoord):
            return NotImplemented
        n = max(self.level, other.level)
        x, y = self.at_level(n), other.at_level(n)
        return x.a == y.a and x.b == y.b

    def __hash__(self):
        v = self.normalized()
        return hash((v.a, v.b, v.level))

    def __repr__(self):
        return f"VertexCoord({self.a}, {self.b}, level={self.level})"


def to_cartesian(v: VertexCoord | Coord, level: int | None = None) -> tuple[float, float]:
    """Cartesian position of a lattice point."""
    if isinstance(v, VertexCoord):
        a, b, n = v.a, v.b, v.level
    else:
        if level is None:
            raise ValueError("a level is required for raw coordinates")
        (a, b), n = v, level
    s = 2.0 ** (-n)
    return ((0.5 * a + b) * s, SQRT3_2 * a * s)


def cartesian_array(coords, level: int):
    """Vectorised ``to_cartesian`` for an ``(k, 2)`` integer array."""
    import numpy as np

    c = np.asarray(coords, dtype=float).reshape(-1, 2)
    s = 2.0 ** (-level)
    return np.column_stack(((0.5 * c[:, 0] + c[:, 1]) * s, SQRT3_2 * c[:, 0] * s))


def dist2(p: Coord, q: Coord) -> int:
    """Squared Euclidean distance in units of the lattice spacing."""
    da, db = q[0] - p[0], q[1] - p[1]
    return da * da + db * db + da * db


def inner2(p: Coord, q: Coord, r: Coord) -> int:
    """Twice the inner product of the steps ``q - p`` and ``r - q``."""
    a1, b1 = q[0] - p[0], q[1] - p[1]
    a2, b2 = r[0] - q[0], r[1] - q[1]
    return 2 * a1 * a2 + 2 * b1 * b2 + a1 * b2 + a2 * b1


# ---------------------------------------------------------------------------
# region membership

def _in_gasket(ca: int, cb: int, n: int) -> bool:
    """Is the unit upward cell with lower-left corner (ca, cb) part of the
    upper-right level-n gasket?  Descends through the three sub-triangles."""
    if ca < 0 or cb < 0 or ca + cb > (1 << n) - 1:
        return False
    while n > 0:
        h = 1 << (n - 1)
        if ca >= h:
            ca -= h
        elif cb >= h:
            cb -= h
        elif ca + cb > h - 1:
            return False
        n -= 1
    return True


def cell_in_region(ca: int, cb: int, n: int, region: str = F) -> bool:
    if _in_gasket(ca, cb, n):
        return True
    if cb < 0 and _in_gasket(ca, -ca - cb - 1, n):
        return True
    if region == FV and _in_gasket(ca, cb - (1 << n), n):
        return True
    return False


def _cells_at(v: Coord) -> tuple[Coord, Coord, Coord]:
    # the three upward unit cells having v as a corner (v as LL, a-corner, b-corner)
    a, b = v
    return ((a, b), (a - 1, b), (a, b - 1))


def cells_at(v: Coord, n: int, region: str = F) -> list[Coord]:
    return [c for c in _cells_at(v) if cell_in_region(c[0], c[1], n, region)]


def is_vertex(v: Coord, n: int, region: str = F) -> bool:
    return bool(cells_at(v, n, region))


def cell_corners(c: Coord) -> tuple[Coord, Coord, Coord]:
    a, b = c
    return ((a, b), (a + 1, b), (a, b + 1))


def edge_cell(p: Coord, q: Coord) -> Coord:
    """Lower-left corner of the unique upward unit cell containing edge pq."""
    da, db = q[0] - p[0], q[1] - p[1]
    if (da, db) in ((1, 0), (0, 1)):
        return p
    if (da, db) in ((-1, 0), (0, -1)):
        return q
    if (da, db) == (-1, 1):
        return (p[0] - 1, p[1])
    if (da, db) == (1, -1):
        return (q[0] - 1, q[1])
    raise ValueError(f"{p} and {q} are not lattice neighbours")


def is_edge(p: Coord, q: Coord, n: int, region: str = F) -> bool:
    try:
        c = edge_cell(p, q)
    except ValueError:
        return False
    return cell_in_region(c[0], c[1], n, region)


def neighbor_coords(v: Coord, n: int, region: str = F) -> list[Coord]:
    out = []
    for c in cells_at(v, n, region):
        for w in cell_corners(c):
            if w != v and w not in out:
                out.append(w)
    return out


def neighbors(v: VertexCoord, N: int, region: str = F) -> set[VertexCoord]:
    """Neighbours of ``v`` in the level-N graph of ``region``."""
    _check_region(region)
    p = v.at_level(N)
    if not is_vertex(p.coord, N, region):
        raise ValueError(f"{v} is not a vertex of {region} at level {N}")
    return {VertexCoord(w[0], w[1], N) for w in neighbor_coords(p.coord, N, region)}


def region_vertices(n: int, region: str = F) -> list[Coord]:
    """All level-n vertices of the region (small n only)."""
    s = 1 << n
    seen = set()
    for ca in range(0, s):
        for cb in range(-2 * s, 2 * s):
            if cell_in_region(ca, cb, n, region):
                seen.update(cell_corners((ca, cb)))
    return sorted(seen)


def corners(n: int) -> dict[str, Coord]:
    s = 1 << n
    return {"O": (0, 0), "a": (s, 0), "b": (0, s), "a'": (s, -s), "b'": (0, -s),
            "a+b": (s, s), "2b": (0, 2 * s)}


def g0_set(n: int, region: str = F) -> frozenset[Coord]:
    c = corners(n)
    keys = ("O", "a", "b", "a'", "b'") if region == F else tuple(c)
    return frozenset(c[k] for k in keys)


def in_g(v: Coord, m: int, n: int) -> bool:
    """Is the level-n point v a vertex of the level-m lattice (m <= n)?"""
    s = 1 << (n - m)
    return v[0] % s == 0 and v[1] % s == 0


def base_level(v: Coord, n: int) -> int:
    """Smallest m with v in G_m."""
    a, b = v
    m = n
    while m > 0 and a % 2 == 0 and b % 2 == 0:
        a //= 2
        b //= 2
        m -= 1
    return m


# ---------------------------------------------------------------------------
# triangles

@dataclass(frozen=True)
class Triangle:
    """Upward triangle of side ``2**-level`` with lower-left corner (ca, cb)."""

    ca: int
    cb: int
    level: int

    @property
    def lower_left(self) -> VertexCoord:
        return VertexCoord(self.ca, self.cb, self.level)

    def corner_coords(self) -> tuple[Coord, Coord, Coord]:
        return cell_corners((self.ca, self.cb))

    def corners(self) -> tuple[VertexCoord, VertexCoord, VertexCoord]:
        return tuple(VertexCoord(a, b, self.level) for a, b in self.corner_coords())

    def contains(self, v: Coord) -> bool:
        return v in self.corner_coords()

    def third(self, p: Coord, q: Coord) -> Coord:
        rest = [c for c in self.corner_coords() if c != p and c != q]
        if len(rest) != 1:
            raise ValueError("p and q must be two distinct corners")
        return rest[0]


def upward_triangles_at(v: VertexCoord, M: int, region: str = F) -> list[Triangle]:
    """The one or two upward level-M triangles of ``region`` having v as corner."""
    _check_region(region)
    p = v.at_level(M)
    return [Triangle(c[0], c[1], M) for c in cells_at(p.coord, M, region)]


def triangle_of_edge(p: Coord, q: Coord, level: int) -> Triangle:
    c = edge_cell(p, q)
    return Triangle(c[0], c[1], level)


# ---------------------------------------------------------------------------
# canonical isometries

def _solve2(r: Coord, u: Coord, v: Coord) -> Coord:
    det = u[0] * v[1] - u[1] * v[0]
    x = r[0] * v[1] - r[1] * v[0]
    y = u[0] * r[1] - u[1] * r[0]
    if det not in (1, -1):
        raise ValueError("degenerate frame")
    return (x * det, y * det)


def _other_triangle(e: Coord, t: Triangle, region: str) -> tuple[Coord, Coord] | None:
    for c in cells_at(e, t.level, region):
        if c != (t.ca, t.cb):
            return tuple(w for w in cell_corners(c) if w != e)
    return None


class CanonicalMap:
    """Similarity carrying the template gasket onto a level-M triangle.

    The main triangle O, a, b goes to entry, exit and the third corner.  The
    mirror half attached at O goes to the other upward triangle at the entry,
    and the translated copy attached at b goes to the other upward triangle at
    the third corner.  In both cases the image of the template corner nearest
    to a is the corner nearest to the exit.  Points are level-L template
    coordinates on one side and level-(M+L) coordinates on the other.
    """

    def __init__(self, entry: Coord, exit: Coord, third: Coord, level: int,
                 region: str = FV):
        if entry == exit:
            raise ValueError("entry and exit must differ")
        tri = triangle_of_edge(entry, exit, level)
        if third != tri.third(entry, exit):
            raise ValueError("third corner does not complete the triangle")
        self.entry, self.exit, self.third, self.level = entry, exit, third, level
        self.triangle = tri
        self.left = self._companion(entry, tri, region)
        self.top = self._companion(third, tri, region)
        self.is_identity = (entry, exit, third) == ((0, 0), (1, 0), (0, 1)) and level == 0

    def _companion(self, at: Coord, tri: Triangle, region: str):
        other = _other_triangle(at, tri, region)
        if other is None:
            return None
        p, q = other
        if dist2(p, self.exit) > dist2(q, self.exit):
            p, q = q, p
        return (p, q)

    @classmethod
    def for_triangle(cls, tri: Triangle, entry: Coord, exit: Coord, region: str = FV):
        return cls(entry, exit, tri.third(entry, exit), tri.level, region)

    @staticmethod
    def _affine(s: int, o: Coord, x: Coord, y: Coord, pa: int, pb: int) -> Coord:
        w = s - pa - pb
        return (w * o[0] + pa * x[0] + pb * y[0], w * o[1] + pa * x[1] + pb * y[1])

    def forward(self, p: Coord, L: int) -> Coord:
        """Template point at level L to a level-(level+L) point."""
        s = 1 << L
        pa, pb = p
        if pb >= 0 and pa >= 0 and pa + pb <= s:
            return self._affine(s, self.entry, self.exit, self.third, pa, pb)
        if pb < 0:
            if self.left is None:
                raise ValueError("mirror half has no image at this entry")
            return self._affine(s, self.entry, self.left[0], self.left[1], pa, -pa - pb)
        if self.top is None:
            raise ValueError("translated copy has no image at this corner")
        return self._affine(s, self.third, self.top[0], self.top[1], pa, pb - s)

    def _local(self, q: Coord, s: int, o: Coord, x: Coord, y: Coord) -> Coord | None:
        r = (q[0] - s * o[0], q[1] - s * o[1])
        pa, pb = _solve2(r, (x[0] - o[0], x[1] - o[1]), (y[0] - o[0], y[1] - o[1]))
        if pa >= 0 and pb >= 0 and pa + pb <= s:
            return (pa, pb)
        return None

    def inverse(self, q: Coord, L: int) -> Coord:
        """Level-(level+L) point back to template coordinates at level L."""
        s = 1 << L
        p = self._local(q, s, self.entry, self.exit, self.third)
        if p is not None:
            return p
        if self.left is not None:
            p = self._local(q, s, self.entry, *self.left)
            if p is not None:
                return (p[0], -p[0] - p[1])
        if self.top is not None:
            p = self._local(q, s, self.third, *self.top)
            if p is not None:
                return (p[0], p[1] + s)
        raise ValueError(f"{q} lies outside the image of the template")

    def forward_path(self, pts: Iterable[Coord], L: int) -> list[Coord]:
        if self.is_identity:
            return list(pts)
        return [self.forward(p, L) for p in pts]

    def inverse_path(self, pts: Iterable[Coord], L: int) -> list[Coord]:
        if self.is_identity:
            return list(pts)
        return [self.inverse(q, L) for q in pts]


def canonical_isometry(entry: VertexCoord, exit: VertexCoord, traversed: Triangle,
                       region: str = FV) -> CanonicalMap:
    """Map descriptor sending O, a, b to entry, exit and the third corner of
    ``traversed``."""
    M = traversed.level
    e, x = entry.at_level(M).coord, exit.at_level(M).coord
    if e == x:
        raise ValueError("entry and exit must differ")
    if not (traversed.contains(e) and traversed.contains(x)):
        raise ValueError("entry and exit must be corners of the traversed triangle")
    return CanonicalMap.for_triangle(traversed, e, x, region)


@lru_cache(maxsize=1 << 18)
def cached_map(entry: Coord, exit: Coord, level: int) -> CanonicalMap:
    """Canonical map for the triangle containing the edge entry-exit."""
    tri = triangle_of_edge(entry, exit, level)
    return CanonicalMap(entry, exit, tri.third(entry, exit), level)


def level1_w_vertices() -> set[Coord]:
    """Vertices a level-1 W path may use: F_1 minus b, a' and b'."""
    c = corners(1)
    bad = {c["b"], c["a'"], c["b'"]}
    return {v for v in region_vertices(1, F) if v not in bad}


def level1_v_vertices() -> set[Coord]:
    """Vertices a level-1 V path may use: F_1^V minus a', b', a+b and 2b."""
    c = corners(1)
    bad = {c["a'"], c["b'"], c["a+b"], c["2b"]}
    return {v for v in region_vertices(1, FV) if v not in bad}
