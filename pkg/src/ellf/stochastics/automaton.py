"""Exact sampling of level-1 self-repelling walks by an h-transform of the
(previous vertex, current vertex) automaton, and recursive refinement to
W_N and V_N walks."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..gasket_geometry import FV, Coord, cached_map, corners, g0_set, inner2, level1_w_vertices, neighbor_coords
from ..path_space import V, W, LatticePath, join_v
from ..renormalization import fixed_point, parse_u

ABSORB = -1


@dataclass(frozen=True)
class Automaton:
    """Completion weights and transition law of the level-1 walk.

    State 0 is the start at O; state k > 0 is a directed step (prev, cur).
    ``h[s]`` is the total weight of all completions to a from state s, so
    ``h[0]`` equals Phi(x_u) = x_u.
    """

    u: float
    x_u: float
    states: tuple[tuple[Coord | None, Coord], ...]
    h: np.ndarray
    next_state: np.ndarray  # (S, 4) successor state index or ABSORB, -2 for padding
    next_vertex: np.ndarray  # (S, 4, 2)
    cum_prob: np.ndarray  # (S, 4) cumulative transition probabilities
    residual: float

    def transition_probs(self, s: int) -> np.ndarray:
        c = self.cum_prob[s]
        return np.diff(np.concatenate(([0.0], c)))


def _step_weight(prev, cur, nxt, u, x, g0, origin):
    w = x
    if prev is not None and cur not in g0 and inner2(prev, cur, nxt) < 0:
        w *= u
    if nxt == origin:
        w *= u
    return w


@lru_cache(maxsize=64)
def _build(u: float) -> Automaton:
    x = fixed_point(u)
    c = corners(1)
    O, A = c["O"], c["a"]
    g0 = g0_set(1, FV)
    allowed = level1_w_vertices()
    adj = {v: sorted(w for w in neighbor_coords(v, 1, FV) if w in allowed) for v in allowed}
    states: list = [(None, O)]
    for v in sorted(allowed):
        if v == A:
            continue
        for w in adj[v]:
            if w != A:
                states.append((v, w))
    index = {s: i for i, s in enumerate(states)}
    S = len(states)
    T = np.zeros((S, S))
    rhs = np.zeros(S)
    trans = []
    for i, (p, cur) in enumerate(states):
        row = []
        for w in adj[cur]:
            wt = _step_weight(p, cur, w, u, x, g0, O)
            if w == A:
                rhs[i] += wt
                row.append((ABSORB, w, wt))
            else:
                j = index[(cur, w)]
                T[i, j] += wt
                row.append((j, w, wt))
        trans.append(row)
    h = np.linalg.solve(np.eye(S) - T, rhs)
    residual = float(np.abs(h - T @ h - rhs).max())
    nxt = np.full((S, 4), -2, dtype=np.int64)
    nv = np.zeros((S, 4, 2), dtype=np.int64)
    cum = np.ones((S, 4))
    for i, row in enumerate(trans):
        acc = 0.0
        for k, (j, w, wt) in enumerate(row):
            # states of zero completion weight are never entered
            if h[i] > 0:
                acc += wt * (1.0 if j == ABSORB else h[j]) / h[i]
            nxt[i, k] = j
            nv[i, k] = w
            cum[i, k] = acc
        cum[i, len(row) - 1:] = 1.0
        nxt[i, len(row):] = nxt[i, len(row) - 1]
        nv[i, len(row):] = nv[i, len(row) - 1]
    return Automaton(u, x, tuple(states), h, nxt, nv, cum, residual)


def build_automaton(u) -> Automaton:
    return _build(float(parse_u(u)))


def sample_w1_batch(aut: Automaton, n: int, rng: np.random.Generator) -> list[tuple]:
    """n independent level-1 W walks, as vertex tuples."""
    if n == 0:
        return []
    state = np.zeros(n, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    steps = [np.zeros((n, 2), dtype=np.int64)]
    lengths = np.zeros(n, dtype=np.int64)
    t = 0
    while alive.any():
        t += 1
        r = rng.random(n)
        k = (r[:, None] > aut.cum_prob[state]).sum(axis=1)
        k = np.minimum(k, 3)
        nv = aut.next_vertex[state, k]
        ns = aut.next_state[state, k]
        steps.append(np.where(alive[:, None], nv, 0))
        lengths[alive] = t
        done = alive & (ns == ABSORB)
        alive &= ~done
        state = np.where(alive, ns, 0)
    arr = np.stack(steps, axis=1)
    return [tuple(map(tuple, arr[i, :lengths[i] + 1].tolist())) for i in range(n)]


class TemplateStream:
    """Buffered supply of level-1 W templates drawn from one automaton."""

    def __init__(self, aut: Automaton, rng: np.random.Generator, batch: int = 4096):
        self.aut, self.rng, self.batch = aut, rng, batch
        self.buf: list[tuple] = []
        self.pos = 0

    def take(self, k: int) -> list[tuple]:
        out = []
        while k > 0:
            if self.pos >= len(self.buf):
                self.buf = sample_w1_batch(self.aut, max(self.batch, k), self.rng)
                self.pos = 0
            m = min(k, len(self.buf) - self.pos)
            out.extend(self.buf[self.pos:self.pos + m])
            self.pos += m
            k -= m
        return out


def _refine_walk(vs: list[Coord], level: int, stream: TemplateStream) -> list[Coord]:
    temps = stream.take(len(vs) - 1)
    out = [vs[0]]
    for (p, q), t in zip(zip(vs, vs[1:]), temps):
        mp = cached_map(p, q, level)
        out.extend(mp.forward(v, 1) for v in t[1:])
    return out


def _sample_w_raw(N: int, stream: TemplateStream) -> list[Coord]:
    vs = list(stream.take(1)[0])
    for level in range(1, N):
        vs = _refine_walk(vs, level, stream)
    return vs


def sample_srw(u, N: int, rng: np.random.Generator) -> LatticePath:
    """Exact draw from the level-N self-repelling walk law on W_N."""
    if N < 1:
        raise ValueError("N must be at least 1")
    stream = TemplateStream(build_automaton(u), rng, batch=64)
    return LatticePath(tuple(_sample_w_raw(N, stream)), N, W)


def sample_v(u, N: int, rng: np.random.Generator) -> LatticePath:
    """V_N walk as two independent W_N halves glued at b."""
    stream = TemplateStream(build_automaton(u), rng, batch=64)
    h1 = _sample_w_raw(N, stream)
    h2 = _sample_w_raw(N, stream)
    return LatticePath(tuple(join_v(h1, h2, N)), N, V)


def sample_srw_batch(u, N: int, reps: int, rng: np.random.Generator,
                     kind: str = W) -> list[LatticePath]:
    """``reps`` independent W_N (or V_N) walks sharing one template buffer."""
    stream = TemplateStream(build_automaton(u), rng)
    out = []
    for _ in range(reps):
        if kind == W:
            out.append(LatticePath(tuple(_sample_w_raw(N, stream)), N, W))
        else:
            h1 = _sample_w_raw(N, stream)
            h2 = _sample_w_raw(N, stream)
            out.append(LatticePath(tuple(join_v(h1, h2, N)), N, V))
    return out
