"""Loop-erased walks by recursive substitution of the ten loopless level-1
paths, the refinement coupling and the erasure-based cross-check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..loop_erasure import GAMMA1, ellf
from ..gasket_geometry import cartesian_array
from ..path_space import GAMMA, TYPE1, V, W, LatticePath, _skeleton
from ..renormalization import spectral, step_weights
from .automaton import sample_srw_batch


def _templates():
    """Per template: sub-triangle corner coefficients over (E, X, T)."""
    nsub = np.zeros(10, dtype=np.int64)
    coef = np.zeros((10, 3, 3, 3), dtype=np.int64)  # template, sub, corner(E,X,T), weight
    types = np.zeros((10, 3), dtype=np.int64)
    for k, w in enumerate(GAMMA1):
        sk = _skeleton(w, 1, 1)
        nsub[k] = len(sk)
        for j, (tri, e, x) in enumerate(zip(sk.triangles, sk.entries, sk.exits)):
            t = tri.third(e, x)
            for c, (pa, pb) in enumerate((e, x, t)):
                coef[k, j, c] = (2 - pa - pb, pa, pb)
            types[k, j] = sk.types[j]
    return nsub, coef, types


NSUB, COEF, SUBTYPES = _templates()


@dataclass
class TriangleChain:
    """Batch of skeletons: row i is a triangle with entry E, exit X, third
    corner T and type; ``rep`` says which sample it belongs to (rows of one
    sample are contiguous and ordered)."""

    E: np.ndarray
    X: np.ndarray
    T: np.ndarray
    typ: np.ndarray
    rep: np.ndarray
    level: int
    reps: int

    @classmethod
    def start(cls, reps: int, kind: str = "hat") -> TriangleChain:
        """The level-0 triangle O, a, b; Type 1 for 'hat', Type 2 for 'hat-prime'."""
        if kind not in ("hat", "hat-prime"):
            raise ValueError("kind must be 'hat' or 'hat-prime'")
        one = np.ones((reps, 1), dtype=np.int64)
        return cls(np.zeros((reps, 2), dtype=np.int64), one * [1, 0], one * [0, 1],
                   np.full(reps, 1 if kind == "hat" else 2, dtype=np.int64),
                   np.arange(reps, dtype=np.int64), 0, reps)

    @classmethod
    def from_path(cls, path: LatticePath) -> TriangleChain:
        sk = _skeleton(path.vertices, path.level, path.level)
        E = np.array(sk.entries, dtype=np.int64).reshape(-1, 2)
        X = np.array(sk.exits, dtype=np.int64).reshape(-1, 2)
        T = np.array([t.third(e, x) for t, e, x in zip(sk.triangles, sk.entries, sk.exits)],
                     dtype=np.int64).reshape(-1, 2)
        return cls(E, X, T, np.array(sk.types, dtype=np.int64),
                   np.zeros(len(sk), dtype=np.int64), path.level, 1)

    def __len__(self):
        return len(self.typ)

    def draw(self, cum_p: np.ndarray, cum_q: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        r = rng.random(len(self.typ))
        idx = np.where(self.typ == TYPE1, np.searchsorted(cum_p, r, side="right"),
                       np.searchsorted(cum_q, r, side="right"))
        return np.minimum(idx, 9)

    def substitute(self, idx: np.ndarray) -> TriangleChain:
        """Replace every triangle by the skeleton of its chosen template."""
        n = NSUB[idx]
        parent = np.repeat(np.arange(len(idx)), n)
        start = np.cumsum(n) - n
        j = np.arange(len(parent)) - np.repeat(start, n)
        k = idx[parent]
        E, X, T = self.E[parent], self.X[parent], self.T[parent]
        c = COEF[k, j]  # (m, 3 corners, 3 weights)

        def corner(ci):
            w = c[:, ci]
            return w[:, 0:1] * E + w[:, 1:2] * X + w[:, 2:3] * T

        return TriangleChain(corner(0), corner(1), corner(2), SUBTYPES[k, j],
                             self.rep[parent], self.level + 1, self.reps)

    def refine(self, cum_p, cum_q, rng) -> TriangleChain:
        return self.substitute(self.draw(cum_p, cum_q, rng))

    def steps(self) -> np.ndarray:
        return self.typ

    def offsets(self) -> np.ndarray:
        """Row offsets of each sample's triangles (length reps + 1)."""
        counts = np.bincount(self.rep, minlength=self.reps)
        return np.concatenate(([0], np.cumsum(counts)))

    def vertex_arrays(self):
        """Flattened vertices of all samples plus per-sample offsets."""
        n = np.where(self.typ == 2, 2, 1)
        rows = np.repeat(np.arange(len(self.typ)), n)
        first = np.concatenate(([True], rows[1:] != rows[:-1]))
        is_mid = first & (self.typ[rows] == 2)
        pts = np.where(is_mid[:, None], self.T[rows], self.X[rows])
        off = self.offsets()
        starts = self.E[off[:-1]]
        vcount = np.bincount(self.rep[rows], minlength=self.reps) + 1
        voff = np.concatenate(([0], np.cumsum(vcount)))
        out = np.empty((voff[-1], 2), dtype=np.int64)
        mask = np.ones(voff[-1], dtype=bool)
        mask[voff[:-1]] = False
        out[voff[:-1]] = starts
        out[mask] = pts
        return out, voff

    def paths(self) -> list[LatticePath]:
        pts, off = self.vertex_arrays()
        lst = pts.tolist()
        return [LatticePath(tuple(map(tuple, lst[off[i]:off[i + 1]])), self.level, GAMMA)
                for i in range(self.reps)]


def _cums(u):
    sw = step_weights(u)
    p, q = sw.as_arrays()
    return np.cumsum(p / p.sum()), np.cumsum(q / q.sum())


def lerw_chain(u, N: int, reps: int, rng: np.random.Generator, kind: str = "hat") -> TriangleChain:
    cp, cq = _cums(u)
    ch = TriangleChain.start(reps, kind)
    for _ in range(N):
        ch = ch.refine(cp, cq, rng)
    return ch


def sample_lerw(u, N: int, rng: np.random.Generator, kind: str = "hat") -> LatticePath:
    """Exact draw of a level-N loop-erased path by recursive substitution."""
    return lerw_chain(u, N, 1, rng, kind).paths()[0]


def sample_lerw_batch(u, N: int, reps: int, rng: np.random.Generator, kind: str = "hat") -> list[LatticePath]:
    return lerw_chain(u, N, reps, rng, kind).paths()


def lerw_by_erasure(u, N: int, rng: np.random.Generator, kind: str = "hat") -> LatticePath:
    """Self-repelling walk followed by erasing larger loops first."""
    return lerw_by_erasure_batch(u, N, 1, rng, kind)[0]


def lerw_by_erasure_batch(u, N: int, reps: int, rng: np.random.Generator,
                          kind: str = "hat") -> list[LatticePath]:
    fam = W if kind == "hat" else V
    return [ellf(w) for w in sample_srw_batch(u, N, reps, rng, fam)]


def refine(path: LatticePath, u, rng: np.random.Generator) -> LatticePath:
    """One level of independent substitution into every skeleton triangle."""
    if not path.is_loopless():
        raise ValueError("refine needs a loopless path")
    cp, cq = _cums(u)
    return TriangleChain.from_path(path).refine(cp, cq, rng).paths()[0]


# ---------------------------------------------------------------------------
# scaled processes

@dataclass(frozen=True)
class SampledProcess:
    """Level-N loop-erased path with its skeleton exit times scaled by lambda^-N."""

    path: LatticePath
    level: int
    exit_times: np.ndarray
    time_scale: float

    def positions(self) -> np.ndarray:
        return cartesian_array(self.path.vertices, self.level)

    def vertex_times(self) -> np.ndarray:
        return self.time_scale * np.arange(len(self.path.vertices))

    def at(self, t) -> np.ndarray:
        """X_N(t) by linear interpolation; stays at the end point afterwards."""
        pos = self.positions()
        vt = self.vertex_times()
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.column_stack((np.interp(t, vt, pos[:, 0]), np.interp(t, vt, pos[:, 1])))

    def to_dict(self) -> dict:
        d = self.path.to_dict()
        d["exit_times"] = [float(v) for v in self.exit_times]
        return d


def _processes(ch: TriangleChain, lam: float) -> list[SampledProcess]:
    scale = lam ** (-ch.level)
    off = ch.offsets()
    cs = np.cumsum(ch.typ)
    out = []
    for i, p in enumerate(ch.paths()):
        seg = cs[off[i]:off[i + 1]] - (cs[off[i] - 1] if off[i] else 0)
        out.append(SampledProcess(p, ch.level, scale * np.concatenate(([0], seg)), scale))
    return out


def sample_X(u, N: int, reps: int, rng: np.random.Generator) -> list[SampledProcess]:
    """Level-N approximations X_N of the scaling limit from f_a."""
    lam = spectral(u).lam
    return _processes(lerw_chain(u, N, reps, rng), lam)


def coupled_levels(u, levels, reps: int, rng: np.random.Generator) -> dict[int, list[SampledProcess]]:
    """One refinement chain per sample, snapshotted at each requested level."""
    levels = sorted(set(levels))
    lam = spectral(u).lam
    cp, cq = _cums(u)
    ch = TriangleChain.start(reps)
    out = {}
    for n in range(1, levels[-1] + 1):
        ch = ch.refine(cp, cq, rng)
        if n in levels:
            out[n] = _processes(ch, lam)
    return out


def sup_distance(a: SampledProcess, b: SampledProcess) -> float:
    """sup_t |X_a(t) - X_b(t)|; both are piecewise linear so the breakpoints suffice."""
    t = np.union1d(a.vertex_times(), b.vertex_times())
    d = a.at(t) - b.at(t)
    return float(np.sqrt((d * d).sum(axis=1)).max())


def self_avoiding(ch: TriangleChain) -> np.ndarray:
    """Per-sample flag: no repeated vertex."""
    pts, off = ch.vertex_arrays()
    rep = np.repeat(np.arange(ch.reps), np.diff(off))
    uniq = np.unique(np.column_stack((rep, pts)), axis=0)
    return np.bincount(uniq[:, 0], minlength=ch.reps) == np.diff(off)


def box_counting_dimension(path: LatticePath, levels=None) -> float:
    """Slope of log(number of level-M skeleton triangles) against M log 2."""
    n = path.level
    levels = list(range(max(1, n // 2), n + 1)) if levels is None else list(levels)
    counts = [len(_skeleton(path.vertices, n, m)) for m in levels]
    slope = np.polyfit(np.array(levels) * np.log(2.0), np.log(counts), 1)[0]
    return float(slope)
