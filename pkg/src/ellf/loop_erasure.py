"""Chronological loop erasure on level-1 paths and the recursive
erasing-larger-loops-first operator."""

from __future__ import annotations

from typing import Sequence

from .gasket_geometry import Coord
from .path_space import (
    GAMMA,
    RAW,
    V,
    LatticePath,
    _coarse,
    _glue,
    _hits,
    _skeleton,
)

# The ten loopless level-1 paths from O to a.  Vertex names are level-1
# coordinates: mOa=(1,0), mOb=(0,1), mab=(1,1), b=(0,2), a=(2,0).
_O, _A, _B = (0, 0), (2, 0), (0, 2)
_MOA, _MOB, _MAB = (1, 0), (0, 1), (1, 1)

GAMMA1: tuple[tuple[Coord, ...], ...] = (
    (_O, _MOA, _A),
    (_O, _MOB, _MOA, _A),
    (_O, _MOA, _MAB, _A),
    (_O, _MOB, _MOA, _MAB, _A),
    (_O, _MOB, _MAB, _MOA, _A),
    (_O, _MOA, _MOB, _MAB, _A),
    (_O, _MOB, _MAB, _A),
    (_O, _MOB, _B, _MAB, _A),
    (_O, _MOB, _B, _MAB, _MOA, _A),
    (_O, _MOA, _MOB, _B, _MAB, _A),
)
_GAMMA1_INDEX = {w: i + 1 for i, w in enumerate(GAMMA1)}


def gamma1_index(path: LatticePath | Sequence[Coord]) -> int:
    """Position 1..10 of a loopless level-1 path in the canonical table."""
    vs = path.vertices if isinstance(path, LatticePath) else tuple(map(tuple, path))
    if isinstance(path, LatticePath) and path.level != 1:
        raise ValueError("gamma1_index expects a level-1 path")
    try:
        return _GAMMA1_INDEX[tuple(vs)]
    except KeyError:
        raise ValueError(f"{vs} is not a loopless level-1 path from O to a") from None


def gamma1_path(i: int) -> LatticePath:
    return LatticePath(GAMMA1[i - 1], 1, GAMMA)


def _chrono_indices(vs: Sequence[Coord]) -> list[int]:
    """Surviving indices s_0 < s_1 < ... of the chronological erasure:
    s_0 is the last visit to the start, s_i the last visit to w(s_{i-1}+1)."""
    last = {}
    for i, v in enumerate(vs):
        last[v] = i
    end = len(vs) - 1
    s = [last[vs[0]]]
    while s[-1] < end:
        s.append(last[vs[s[-1] + 1]])
    return s


def erase_stack(vs: Sequence[Coord]) -> tuple[Coord, ...]:
    """Loop erasure by a stack: on revisiting a vertex, drop everything after
    its earlier occurrence.  Equal to the chronological erasure."""
    out: list[Coord] = []
    pos: dict[Coord, int] = {}
    for v in vs:
        k = pos.get(v)
        if k is None:
            pos[v] = len(out)
            out.append(v)
        else:
            for w in out[k + 1:]:
                del pos[w]
            del out[k + 1:]
    return tuple(out)


def erase_chronological(path: LatticePath) -> LatticePath:
    """Loop erasure of a level-1 W or V path (last-visit recursion)."""
    if path.kind == RAW:
        raise ValueError("chronological erasure needs a W or V path")
    vs = path.vertices
    return LatticePath(tuple(vs[i] for i in _chrono_indices(vs)), path.level, GAMMA)


def _erase_largest_raw(vs: Sequence[Coord], n: int):
    times = _hits(vs, n, 1)
    coarse = _coarse(vs, n, 1, times)
    keep = _chrono_indices(coarse)
    fine: list[Coord] = [vs[0]]
    for k in keep[:-1]:
        fine.extend(vs[times[k] + 1:times[k + 1] + 1])
    return fine, [coarse[k] for k in keep]


def erase_largest_scale(path: LatticePath) -> tuple[LatticePath, LatticePath]:
    """Base step: erase the loops of Q_1 w chronologically and refit the
    original fine pieces that follow each surviving coarse visit.

    Returns (refined level-n path, loopless level-1 coarse path).
    """
    if path.level < 1:
        raise ValueError("erase_largest_scale needs a path of level >= 1")
    if path.kind == RAW:
        raise ValueError("erase_largest_scale needs a W or V path")
    fine, coarse = _erase_largest_raw(path.vertices, path.level)
    ref = LatticePath(tuple(fine), path.level, path.kind)
    kind = V if (0, 1 << path.level) in ref.vertices else "W"
    ref = LatticePath(ref.vertices, path.level, GAMMA if len(set(fine)) == len(fine) else kind)
    return ref, LatticePath(tuple(coarse), 1, GAMMA)


def _ellf_raw(vs: Sequence[Coord], n: int, keep: bool):
    cur = list(vs)
    qhats = []
    for m in range(n):
        L = n - m
        if m == 0:
            fine, coarse = _erase_largest_raw(cur, n)
            cur = fine
            if keep:
                qhats.append(tuple(coarse))
            continue
        sk = _skeleton(cur, n, m)
        maps = sk.maps()
        cuts = sk.exit_times
        new_fine, new_coarse = [], []
        for mp, t0, t1 in zip(maps, cuts, cuts[1:]):
            seg = mp.inverse_path(cur[t0:t1 + 1], L)
            f, c = _erase_largest_raw(seg, L)
            new_fine.append(f)
            new_coarse.append(c)
        cur = _glue(maps, new_fine, L)
        if keep:
            qhats.append(tuple(_glue(maps, new_coarse, 1)))
    return cur, qhats


def ellf(path: LatticePath, keep_intermediates: bool = False):
    """Erase loops scale by scale, largest first.

    At pass M the current path is cut along its 2^-M skeleton, the base step
    is applied inside every skeleton triangle and the pieces are reassembled.
    Returns the loopless result, and with ``keep_intermediates`` also the list
    of coarse paths Q-hat_1 .. Q-hat_N.
    """
    if path.kind == RAW:
        raise ValueError("ellf needs a W or V path")
    n = path.level
    if n == 0:
        out = LatticePath(path.vertices, 0, GAMMA)
        return (out, []) if keep_intermediates else out
    cur, qhats = _ellf_raw(path.vertices, n, keep_intermediates)
    out = LatticePath(tuple(cur), n, GAMMA)
    if keep_intermediates:
        return out, [LatticePath(q, m + 1, GAMMA) for m, q in enumerate(qhats)]
    return out
