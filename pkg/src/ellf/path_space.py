"""Lattice paths on the pre-gaskets: classes, hitting times, skeletons,
decomposition into self-similar pieces and the self-repelling weights."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .gasket_geometry import (
    FV,
    CanonicalMap,
    Coord,
    Triangle,
    VertexCoord,
    base_level,
    cached_map,
    corners,
    edge_cell,
    g0_set,
    inner2,
    is_edge,
    is_vertex,
)

W, V, GAMMA, RAW = "W", "V", "Gamma", "Raw"
KINDS = (W, V, GAMMA, RAW)
TYPE1, TYPE2 = 1, 2


def _as_coords(vertices, level: int) -> tuple[Coord, ...]:
    out = []
    for v in vertices:
        if isinstance(v, VertexCoord):
            out.append(v.at_level(level).coord)
        else:
            out.append((int(v[0]), int(v[1])))
    return tuple(out)


@dataclass(frozen=True)
class LatticePath:
    """Vertex sequence at a single level, tagged with its path class."""

    vertices: tuple[Coord, ...]
    level: int
    kind: str = RAW

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown path class {self.kind!r}")

    @classmethod
    def from_vertices(cls, vertices, level: int, kind: str | None = None) -> LatticePath:
        vs = _as_coords(vertices, level)
        if kind is None:
            c = classify(vs, level)
            kind = RAW if c.kind == "invalid" else c.kind
        return cls(vs, level, kind)

    def __len__(self):
        return len(self.vertices)

    @property
    def length(self) -> int:
        """Number of steps."""
        return len(self.vertices) - 1

    def vertex_coords(self) -> list[VertexCoord]:
        return [VertexCoord(a, b, self.level) for a, b in self.vertices]

    def is_loopless(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)

    def visits_b(self) -> bool:
        return (0, 1 << self.level) in self.vertices

    def base_kind(self) -> str:
        """W or V, read off from whether the path visits b."""
        if self.kind == RAW:
            raise ValueError("raw paths have no base class")
        return V if self.visits_b() else W

    def to_dict(self) -> dict:
        return {"level": self.level, "class": self.kind,
                "vertices": [[a, b] for a, b in self.vertices]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> LatticePath:
        return cls(tuple((int(a), int(b)) for a, b in d["vertices"]), int(d["level"]),
                   d.get("class", RAW))


def dump_jsonl(paths: Iterable[LatticePath], fh, extra: Sequence[dict] | None = None) -> None:
    for i, p in enumerate(paths):
        d = p.to_dict()
        if extra is not None:
            d.update(extra[i])
        fh.write(json.dumps(d, separators=(",", ":")) + "\n")


def load_jsonl(fh) -> list[LatticePath]:
    return [LatticePath.from_dict(json.loads(line)) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# classification

class Classification(NamedTuple):
    kind: str
    reason: str | None = None


def _level0_trace(vs: Sequence[Coord], n: int) -> list[Coord]:
    g0 = g0_set(n, FV)
    trace = []
    for v in vs:
        if v in g0 and (not trace or trace[-1] != v):
            trace.append(v)
    return trace


def classify(vertices, level: int) -> Classification:
    """Most specific class of a vertex sequence: Gamma, W, V or invalid."""
    vs = _as_coords(vertices, level)
    if not vs:
        raise ValueError("empty path")
    c = corners(level)
    O, A, B = c["O"], c["a"], c["b"]
    for v in vs:
        if not is_vertex(v, level, FV):
            return Classification("invalid", f"{v} is not a gasket vertex")
    for p, q in zip(vs, vs[1:]):
        if not is_edge(p, q, level, FV):
            return Classification("invalid", f"{p}->{q} is not an edge")
    if vs[0] != O:
        return Classification("invalid", "does not start at O")
    if vs[-1] != A:
        return Classification("invalid", "does not end at a")
    if A in vs[:-1]:
        return Classification("invalid", "hits a before the end")
    trace = _level0_trace(vs, level)
    if trace == [O, A]:
        kind = W
    elif trace == [O, B, A]:
        kind = V
    else:
        return Classification("invalid", f"level-0 trace {trace} is neither (O,a) nor (O,b,a)")
    if len(set(vs)) == len(vs):
        return Classification(GAMMA)
    return Classification(kind)


# ---------------------------------------------------------------------------
# reversing and revisiting numbers

def _nm_counts(vs: Sequence[Coord], g0: frozenset, origin: Coord) -> tuple[int, int]:
    n = 0
    for i in range(1, len(vs) - 1):
        if vs[i] not in g0 and inner2(vs[i - 1], vs[i], vs[i + 1]) < 0:
            n += 1
    m = sum(1 for v in vs[1:] if v == origin)
    return n, m


def reversing_revisit_counts(path: LatticePath | Sequence) -> tuple[int, int]:
    """(N(w), M(w)) of a level-1 W path: sharp turns or reversals away from the
    outer corners, and returns to O."""
    if isinstance(path, LatticePath):
        if path.level != 1:
            raise ValueError("reversing/revisiting numbers are defined on level-1 paths")
        vs = path.vertices
    else:
        vs = _as_coords(path, 1)
    return _nm_counts(vs, g0_set(1, FV), (0, 0))


# ---------------------------------------------------------------------------
# hitting times and coarse graining

def _hits(vs: Sequence[Coord], n: int, m: int) -> list[int]:
    s = 1 << (n - m)
    mask = s - 1
    times = [0]
    last = vs[0]
    for j in range(1, len(vs)):
        v = vs[j]
        if v[0] & mask == 0 and v[1] & mask == 0 and v != last:
            times.append(j)
            last = v
    return times


def hitting_times(path: LatticePath, M: int) -> list[int]:
    if M > path.level or M < 0:
        raise ValueError("coarse level must lie between 0 and the path level")
    return _hits(path.vertices, path.level, M)


def _coarse(vs: Sequence[Coord], n: int, m: int, times: Sequence[int] | None = None):
    if times is None:
        times = _hits(vs, n, m)
    sh = n - m
    return tuple((vs[t][0] >> sh, vs[t][1] >> sh) for t in times)


def coarse_grain(path: LatticePath, M: int) -> LatticePath:
    """Q_M: the sequence of successive distinct G_M hits, at level M."""
    if M > path.level or M < 0:
        raise ValueError("coarse level must lie between 0 and the path level")
    return LatticePath(_coarse(path.vertices, path.level, M), M, path.kind)


# ---------------------------------------------------------------------------
# skeletons

@dataclass(frozen=True)
class Skeleton:
    """Ordered triangles a path passes through at scale 2**-scale."""

    triangles: tuple[Triangle, ...]
    types: tuple[int, ...]
    exit_times: tuple[int, ...]
    scale: int
    entries: tuple[Coord, ...] = field(default=())
    exits: tuple[Coord, ...] = field(default=())

    @property
    def s1(self) -> int:
        return sum(1 for t in self.types if t == TYPE1)

    @property
    def s2(self) -> int:
        return sum(1 for t in self.types if t == TYPE2)

    def counts(self) -> tuple[int, int]:
        return self.s1, self.s2

    def maps(self) -> list[CanonicalMap]:
        return [cached_map(e, x, self.scale) for e, x in zip(self.entries, self.exits)]

    def __len__(self):
        return len(self.triangles)


def _skeleton_indices(coarse: Sequence[Coord]) -> list[int]:
    """Indices into the coarse path of the exit points (J recursion)."""
    m = len(coarse) - 1
    out = [0]
    n = 0
    while n < m:
        cell = edge_cell(coarse[n], coarse[n + 1])
        tri = {cell, (cell[0] + 1, cell[1]), (cell[0], cell[1] + 1)}
        j = n + 1
        while j < m and coarse[j + 1] in tri:
            j += 1
        out.append(j)
        n = j
    return out


def _skeleton(vs: Sequence[Coord], n: int, m: int, times=None, strict: bool = True) -> Skeleton:
    if times is None:
        times = _hits(vs, n, m)
    coarse = _coarse(vs, n, m, times)
    if strict and len(set(coarse)) != len(coarse):
        raise ValueError("coarse path is not loopless; skeleton types are undefined")
    idx = _skeleton_indices(coarse)
    tris, types, ents, exs = [], [], [], []
    for i0, i1 in zip(idx, idx[1:]):
        c = edge_cell(coarse[i0], coarse[i0 + 1])
        tris.append(Triangle(c[0], c[1], m))
        types.append(i1 - i0)
        ents.append(coarse[i0])
        exs.append(coarse[i1])
    return Skeleton(tuple(tris), tuple(types), tuple(times[i] for i in idx), m,
                    tuple(ents), tuple(exs))


def skeleton(path: LatticePath, M: int) -> Skeleton:
    """sigma_M(w) with Type-1/Type-2 labels; requires Q_M(w) loopless."""
    if M > path.level or M < 0:
        raise ValueError("coarse level must lie between 0 and the path level")
    return _skeleton(path.vertices, path.level, M)


# ---------------------------------------------------------------------------
# decomposition and assembly

@dataclass(frozen=True)
class Decomposition:
    mode: str
    coarse: LatticePath
    skeleton: Skeleton | None
    maps: tuple[CanonicalMap, ...]
    segments: tuple[LatticePath, ...]
    cuts: tuple[int, ...]


def _decompose_raw(vs: Sequence[Coord], n: int, m: int, mode: str):
    """Cut points, maps and pulled-back segment vertex lists."""
    L = n - m
    times = _hits(vs, n, m)
    coarse = _coarse(vs, n, m, times)
    if mode == "skeleton":
        sk = _skeleton(vs, n, m, times)
        cuts = sk.exit_times
        maps = sk.maps()
        kinds = [W if t == TYPE1 else V for t in sk.types]
    elif mode == "hitting":
        sk = None
        cuts = tuple(times)
        maps = [cached_map(p, q, m) for p, q in zip(coarse, coarse[1:])]
        kinds = [W] * len(maps)
    else:
        raise ValueError(f"unknown decomposition mode {mode!r}")
    segs = [mp.inverse_path(vs[t0:t1 + 1], L) for mp, t0, t1 in zip(maps, cuts, cuts[1:])]
    return coarse, sk, maps, cuts, segs, kinds


def decompose(path: LatticePath, M: int, mode: str = "skeleton") -> Decomposition:
    """Split a level-N path into level-(N-M) template segments.

    ``mode="hitting"`` cuts at every G_M hitting time (each piece is a W path);
    ``mode="skeleton"`` cuts at the skeleton exit times (Type 1 pieces are W
    paths, Type 2 pieces are V paths) and needs a loopless Q_M.
    """
    if M > path.level or M < 0:
        raise ValueError("coarse level must lie between 0 and the path level")
    coarse, sk, maps, cuts, segs, kinds = _decompose_raw(path.vertices, path.level, M, mode)
    L = path.level - M
    segments = tuple(LatticePath(tuple(s), L, k) for s, k in zip(segs, kinds))
    return Decomposition(mode, LatticePath(coarse, M, path.kind), sk, tuple(maps),
                         segments, tuple(cuts))


def _glue(maps, segs, L: int) -> list[Coord]:
    out: list[Coord] = []
    for mp, seg in zip(maps, segs):
        pts = mp.forward_path(seg, L)
        if out:
            if out[-1] != pts[0]:
                raise ValueError("segments do not join up")
            out.extend(pts[1:])
        else:
            out.extend(pts)
    return out


def assemble(frame, segments: Sequence[LatticePath], strict: bool = True) -> LatticePath:
    """Inverse of ``decompose``: push the template segments forward into the
    triangles of a skeleton (or along the steps of a coarse path)."""
    if isinstance(frame, Decomposition):
        frame = frame.skeleton if frame.mode == "skeleton" else frame.coarse
    if isinstance(frame, Skeleton):
        maps = frame.maps()
        wanted = [W if t == TYPE1 else V for t in frame.types]
        m = frame.scale
    elif isinstance(frame, LatticePath):
        cs = frame.vertices
        maps = [cached_map(p, q, frame.level) for p, q in zip(cs, cs[1:])]
        wanted = [W] * len(maps)
        m = frame.level
    else:
        raise TypeError("frame must be a Skeleton or a coarse LatticePath")
    if len(segments) != len(maps):
        raise ValueError(f"expected {len(maps)} segments, got {len(segments)}")
    levels = {s.level for s in segments}
    if len(levels) != 1:
        raise ValueError("segments must share one level")
    L = levels.pop()
    if strict:
        for i, (s, k) in enumerate(zip(segments, wanted)):
            if s.kind == RAW or s.base_kind() != k:
                raise ValueError(f"segment {i} has class {s.kind}, triangle needs {k}")
    vs = tuple(_glue(maps, [s.vertices for s in segments], L))
    n = m + L
    kind = V if (0, 1 << n) in vs else W
    if len(set(vs)) == len(vs):
        kind = GAMMA
    return LatticePath(vs, n, kind)


# ---------------------------------------------------------------------------
# weights

def _level0_map(entry: Coord, exit: Coord, third: Coord) -> CanonicalMap:
    return CanonicalMap(entry, exit, third, 0)


V_FIRST = _level0_map((0, 0), (0, 1), (1, 0))
V_SECOND = _level0_map((0, 1), (1, 0), (0, 0))


def split_v(vs: Sequence[Coord], n: int) -> tuple[list[Coord], list[Coord]]:
    """The two W_n halves of a V_n path, split at the first visit to b."""
    b = (0, 1 << n)
    k = list(vs).index(b)
    return V_FIRST.inverse_path(vs[:k + 1], n), V_SECOND.inverse_path(vs[k:], n)


def join_v(first: Sequence[Coord], second: Sequence[Coord], n: int) -> list[Coord]:
    a = V_FIRST.forward_path(first, n)
    return a + V_SECOND.forward_path(second, n)[1:]


def _weight1(vs, u, x):
    nn, mm = _nm_counts(vs, g0_set(1, FV), (0, 0))
    return u ** (nn + mm) * x ** (len(vs) - 2)


def _weight_w(vs: Sequence[Coord], n: int, u, x):
    total = 1
    while n > 1:
        _, _, maps, cuts, segs, _ = _decompose_raw(vs, n, n - 1, "hitting")
        for s in segs:
            total = total * _weight1(s, u, x)
        vs = _coarse(vs, n, n - 1)
        n -= 1
    return total * _weight1(vs, u, x)


def weight(path: LatticePath, u, x, mode: str = "float"):
    """Self-repelling weight P_N^u(w) evaluated at a free x.

    Level 1: ``u**(N+M) * x**(len-1)``; higher levels multiply the level-1
    weights of the hitting-time pieces with the weight of the coarse path.
    V paths get the product of the weights of their two halves.
    """
    if path.kind == RAW:
        raise ValueError("weight is defined on W and V paths only")
    if mode == "exact":
        u, x = Fraction(u), Fraction(x)
    elif mode == "float":
        u, x = float(u), float(x)
    else:
        raise ValueError("mode must be 'exact' or 'float'")
    n = path.level
    if n == 0:
        return u ** 0
    if path.base_kind() == V:
        h1, h2 = split_v(path.vertices, n)
        return _weight_w(h1, n, u, x) * _weight_w(h2, n, u, x)
    return _weight_w(path.vertices, n, u, x)


# ---------------------------------------------------------------------------
# loops

class Loop(NamedTuple):
    start: int
    end: int
    base_level: int
    diameter2: int  # squared diameter in units of the path's lattice spacing

    def scale(self, n: int) -> int | None:
        """M if this is a 2^-M-scale loop, else None."""
        if self.diameter2 >= 4 ** (n - self.base_level):
            return self.base_level
        return None


def _diameter2(pts: np.ndarray) -> int:
    if len(pts) < 2:
        return 0
    da = pts[:, None, 0] - pts[None, :, 0]
    db = pts[:, None, 1] - pts[None, :, 1]
    return int((da * da + db * db + da * db).max())


def loops(path: LatticePath, elementary: bool = True) -> list[Loop]:
    """Loops of the path with their base level and squared diameter.

    Elementary loops run between consecutive visits of a vertex; with
    ``elementary=False`` each repeated vertex contributes one loop from its
    first to its last visit instead.
    """
    arr = np.asarray(path.vertices, dtype=np.int64)
    spans = []
    if elementary:
        prev: dict[Coord, int] = {}
        for i, v in enumerate(path.vertices):
            if v in prev:
                spans.append((prev[v], i))
            prev[v] = i
    else:
        first: dict[Coord, int] = {}
        last: dict[Coord, int] = {}
        for i, v in enumerate(path.vertices):
            first.setdefault(v, i)
            last[v] = i
        spans = [(i, last[v]) for v, i in first.items() if last[v] > i]
    out = [Loop(i, j, base_level(path.vertices[i], path.level), _diameter2(np.unique(arr[i:j + 1], axis=0)))
           for i, j in spans]
    out.sort()
    return out


def max_loop_scale(path: LatticePath, elementary: bool = True) -> int | None:
    """Smallest M (largest geometric scale) at which a 2^-M-scale loop exists,
    or None when there is none."""
    scales = [s for s in (lp.scale(path.level) for lp in loops(path, elementary)) if s is not None]
    return min(scales) if scales else None
