"""Exact verification tools: truncated rational power series, transfer-matrix
weight series on the level-1 graph, and brute-force enumeration with loop
erasure."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from . import closed_forms as cf
from .loop_erasure import GAMMA1, erase_stack
from .gasket_geometry import (
    FV,
    corners,
    g0_set,
    inner2,
    level1_v_vertices,
    level1_w_vertices,
    neighbor_coords,
)

MAX_ENUM_LEN = 14


class TruncatedSeries:
    """sum_k c_k x^k + O(x^(L+1)) with exact rational coefficients."""

    __slots__ = ("c", "L", "u")

    def __init__(self, coeffs: Sequence, L: int, u: Fraction | None = None):
        if L < 0:
            raise ValueError("truncation order must be nonnegative")
        c = [Fraction(v) for v in list(coeffs)[:L + 1]]
        c += [Fraction(0)] * (L + 1 - len(c))
        self.c, self.L, self.u = c, L, u

    @classmethod
    def variable(cls, L: int, u=None) -> TruncatedSeries:
        return cls([0, 1], L, u)

    @classmethod
    def constant(cls, v, L: int, u=None) -> TruncatedSeries:
        return cls([v], L, u)

    def _lift(self, o) -> TruncatedSeries:
        if isinstance(o, TruncatedSeries):
            return o
        return TruncatedSeries([o], self.L, self.u)

    def _new(self, c, L) -> TruncatedSeries:
        return TruncatedSeries(c, L, self.u)

    def __getitem__(self, k: int) -> Fraction:
        if k > self.L:
            raise IndexError(f"coefficient {k} beyond truncation {self.L}")
        return self.c[k]

    @property
    def coefficients(self) -> list[Fraction]:
        return list(self.c)

    def valuation(self) -> int:
        for k, v in enumerate(self.c):
            if v:
                return k
        return self.L + 1

    def truncate(self, L: int) -> TruncatedSeries:
        if L > self.L:
            raise ValueError(f"cannot extend a series known to order {self.L} to {L}")
        return self._new(self.c[:L + 1], L)

    def __add__(self, o):
        o = self._lift(o)
        L = min(self.L, o.L)
        return self._new([self.c[k] + o.c[k] for k in range(L + 1)], L)

    __radd__ = __add__

    def __neg__(self):
        return self._new([-v for v in self.c], self.L)

    def __pos__(self):
        return self

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, o):
        if not isinstance(o, TruncatedSeries):
            o = Fraction(o)
            return self._new([v * o for v in self.c], self.L)
        L = min(self.L, o.L)
        r = [Fraction(0)] * (L + 1)
        oc = o.c
        for i in range(L + 1):
            a = self.c[i]
            if a:
                for j in range(L + 1 - i):
                    b = oc[j]
                    if b:
                        r[i + j] += a * b
        return self._new(r, L)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if not isinstance(o, TruncatedSeries):
            o = Fraction(o)
            return self._new([v / o for v in self.c], self.L)
        v = o.valuation()
        if v > o.L:
            raise ZeroDivisionError("division by a series that vanishes to its known order")
        if any(self.c[k] for k in range(min(v, self.L + 1))):
            raise ZeroDivisionError("divisor has zero constant term and the quotient is not a power series")
        L = min(self.L, o.L) - v
        if L < 0:
            raise ZeroDivisionError("no coefficients survive the division")
        num, den = self.c[v:], o.c[v:]
        r = [Fraction(0)] * (L + 1)
        d0 = den[0]
        for k in range(L + 1):
            acc = num[k]
            for j in range(1, k + 1):
                if den[j]:
                    acc -= den[j] * r[k - j]
            r[k] = acc / d0
        return self._new(r, L)

    def __rtruediv__(self, o):
        return self._lift(o) / self

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        r = self._new([1], self.L)
        b = self
        while n:
            if n & 1:
                r = r * b
            b = b * b
            n >>= 1
        return r

    def compose(self, g: TruncatedSeries) -> TruncatedSeries:
        """self(g(x)) for g with zero constant term (Horner scheme)."""
        if g.c[0]:
            raise ValueError("composition needs an inner series with zero constant term")
        L = min(self.L, g.L)
        r = self._new([self.c[L]], L)
        for k in range(L - 1, -1, -1):
            r = r * g + self.c[k]
        return r

    def __eq__(self, o):
        if not isinstance(o, TruncatedSeries):
            return NotImplemented
        L = min(self.L, o.L)
        return self.c[:L + 1] == o.c[:L + 1]

    def __repr__(self):
        terms = [f"{v}*x^{k}" for k, v in enumerate(self.c) if v]
        return f"TruncatedSeries({' + '.join(terms) or '0'} + O(x^{self.L + 1}))"


def series_arith(op: str, *args):
    """Dispatch for add, mul, div and expand_closed_form."""
    if op == "add":
        return args[0] + args[1]
    if op == "mul":
        return args[0] * args[1]
    if op == "div":
        return args[0] / args[1]
    if op == "expand_closed_form":
        return expand_closed_form(*args)
    raise ValueError(f"unknown series operation {op!r}")


# ---------------------------------------------------------------------------
# closed-form expansions

def _closed_form(name: str):
    lname = name.lower()
    if lname in ("phi", "xi", "ell", "sigma"):
        f = cf.GENERATING[{"phi": "Phi", "xi": "Xi", "ell": "Ell", "sigma": "Sigma"}[lname]]
        return lambda x, u: f(x, u)
    if lname[0] in "pq" and lname[1:].isdigit() and 1 <= int(lname[1:]) <= 10:
        i = int(lname[1:]) - 1
        table = cf.p_weights if lname[0] == "p" else cf.q_weights
        return lambda x, u: table(x, u)[i]
    if lname.startswith("q") and lname.endswith("_printed"):
        i = int(lname[1:-8]) - 1
        return lambda x, u: cf.q_weights(x, u, printed_q2=True)[i]
    raise ValueError(f"unknown closed form {name!r}")


def expand_closed_form(name: str, u, L: int) -> TruncatedSeries:
    """Taylor expansion in x through x^L of a closed form at rational u."""
    u = Fraction(u)
    f = _closed_form(name)
    pad = 4
    while True:
        x = TruncatedSeries.variable(L + pad, u)
        s = f(x, u)
        if not isinstance(s, TruncatedSeries):
            s = TruncatedSeries([s], L, u)
        if s.L >= L:
            return s.truncate(L)
        pad += L - s.L


# ---------------------------------------------------------------------------
# transfer-matrix series on the level-1 graph

def _graph(allowed: set) -> dict:
    return {v: [w for w in neighbor_coords(v, 1, FV) if w in allowed] for v in allowed}


def dp_weight_series(family: str, L: int, u) -> TruncatedSeries:
    """sum over family paths of u^(reversals + revisits) x^length, by dynamic
    programming over (previous vertex, current vertex) states.

    W1: walks O -> a on F_1 avoiding b, a', b'.  V1: walks through b, weighted
    as the product of their two halves.  U1_half: loops at O through the
    interior vertices of one half of F_1 (reversals only).
    """
    if L > 64:
        raise ValueError("L must not exceed 64")
    u = Fraction(u)
    c = corners(1)
    O, A, B = c["O"], c["a"], c["b"]
    g0 = g0_set(1, FV)
    coeffs = [Fraction(0)] * (L + 1)

    def turn(p, v, w):
        return v not in g0 and inner2(p, v, w) < 0

    if family == "U1_half":
        inner = {(1, 0), (0, 1), (1, 1)}
        adj = _graph(inner | {O})
        cur = defaultdict(Fraction)
        for w in adj[O]:
            if w in inner:
                cur[(O, w)] += 1
        for ell in range(2, L + 1):
            nxt = defaultdict(Fraction)
            for (p, v), wt in cur.items():
                for w in adj[v]:
                    f = wt * (u if turn(p, v, w) else 1)
                    if w == O:
                        coeffs[ell] += f
                    else:
                        nxt[(v, w)] += f
            cur = nxt
        return TruncatedSeries(coeffs, L, u)

    if family == "W1":
        adj = _graph(level1_w_vertices())
        phase_of = None
    elif family == "V1":
        adj = _graph(level1_v_vertices())
        phase_of = B
    else:
        raise ValueError(f"unknown family {family!r}")

    cur = defaultdict(Fraction)
    for w in adj[O]:
        cur[(O, w, 1 if w == phase_of else 0)] += u if w == O else 1
    for ell in range(1, L + 1):
        nxt = defaultdict(Fraction)
        for (p, v, ph), wt in cur.items():
            if v == A:
                if phase_of is None or ph == 1:
                    coeffs[ell] += wt
                continue
            for w in adj[v]:
                f = wt * (u if turn(p, v, w) else 1)
                nph = ph
                if phase_of is not None:
                    if ph == 0 and w == A:
                        continue
                    if ph == 1 and w == O:
                        continue
                    if w == B:
                        if ph == 1:
                            f *= u
                        nph = 1
                if ph == 0 and w == O:
                    f *= u
                nxt[(v, w, nph)] += f
        cur = nxt
    return TruncatedSeries(coeffs, L, u)


# ---------------------------------------------------------------------------
# enumeration

def enumerate_paths(family: str, L: int) -> Iterator[tuple]:
    """Every W1 or V1 path with at most L steps, once, as a vertex tuple."""
    if L > MAX_ENUM_LEN:
        raise MemoryError(f"enumeration is capped at length {MAX_ENUM_LEN}")
    c = corners(1)
    O, A, B = c["O"], c["a"], c["b"]
    if family == "W1":
        adj = _graph(level1_w_vertices())
    elif family == "V1":
        adj = _graph(level1_v_vertices())
    else:
        raise ValueError(f"unknown family {family!r}")
    need_b = family == "V1"
    path = [O]
    seen_b = [False]
    stack = [iter(adj[O])]
    while stack:
        w = next(stack[-1], None)
        if w is None:
            stack.pop()
            path.pop()
            seen_b.pop()
            continue
        hb = seen_b[-1]
        if need_b:
            if w == A and not hb:
                continue
            if w == O and hb:
                continue
        if w == A:
            yield tuple(path) + (A,)
            continue
        if len(path) >= L:
            continue
        path.append(w)
        seen_b.append(hb or w == B)
        stack.append(iter(adj[w]))


def _v_exponent(vs: Sequence) -> int:
    g0 = g0_set(1, FV)
    B = (0, 2)
    n = sum(1 for i in range(1, len(vs) - 1) if vs[i] not in g0 and inner2(vs[i - 1], vs[i], vs[i + 1]) < 0)
    kb = vs.index(B)
    m = sum(1 for v in vs[1:kb] if v == (0, 0)) + sum(1 for v in vs[kb + 1:] if v == B)
    return n + m


def _w_exponent(vs: Sequence) -> int:
    g0 = g0_set(1, FV)
    n = sum(1 for i in range(1, len(vs) - 1) if vs[i] not in g0 and inner2(vs[i - 1], vs[i], vs[i + 1]) < 0)
    return n + sum(1 for v in vs[1:] if v == (0, 0))


@lru_cache(maxsize=4)
def _outcome_counts(max_len: int):
    """counts[family][index][(length, exponent)] over enumerated paths."""
    idx = {w: i for i, w in enumerate(GAMMA1)}
    out = {}
    for fam, expo in (("W1", _w_exponent), ("V1", _v_exponent)):
        tab = [defaultdict(int) for _ in range(10)]
        for vs in enumerate_paths(fam, max_len):
            tab[idx[erase_stack(vs)]][(len(vs) - 1, expo(vs))] += 1
        out[fam] = tab
    return out


def lerw_outcome_series(L: int, u) -> dict:
    """p-hat_i and q-hat_i through x^L from enumerated walks and loop erasure.

    p-hat_i sums u^(N+M) x^(len-1) over W1 walks erasing to w*_i, q-hat_i sums
    u^(N+M) x^(len-2) over V1 walks; walks of length up to L+2 are needed.
    """
    if L + 2 > MAX_ENUM_LEN:
        raise MemoryError(f"L={L} needs walks longer than the cap {MAX_ENUM_LEN}")
    u = Fraction(u)
    counts = _outcome_counts(L + 2)
    res = {}
    for fam, key, shift in (("W1", "p", 1), ("V1", "q", 2)):
        series = []
        for tab in counts[fam]:
            c = [Fraction(0)] * (L + 1)
            for (ell, k), n in tab.items():
                d = ell - shift
                if d <= L:
                    c[d] += n * u ** k
            series.append(TruncatedSeries(c, L, u))
        res[key] = series
    return res


@dataclass(frozen=True)
class ComparisonReport:
    equal: bool
    first_mismatch: int | None
    L: int

    def to_dict(self) -> dict:
        return {"equal": self.equal, "first_mismatch": self.first_mismatch, "L": self.L}


def compare(lhs: TruncatedSeries, rhs: TruncatedSeries) -> ComparisonReport:
    if lhs.u is not None and rhs.u is not None and lhs.u != rhs.u:
        raise ValueError("series were computed at different u")
    L = min(lhs.L, rhs.L)
    for k in range(L + 1):
        if lhs.c[k] != rhs.c[k]:
            return ComparisonReport(False, k, L)
    return ComparisonReport(True, None, L)


def verify_target(target: str, u, L: int) -> dict:
    """Run one oracle comparison; targets phi, xi, p, q, or p1..q10."""
    u = Fraction(u)
    t = target.lower()
    if t in ("phi", "xi"):
        fam = "W1" if t == "phi" else "U1_half"
        rep = compare(dp_weight_series(fam, L, u), expand_closed_form(t, u, L))
        return [{"target": t, "u": str(u), "L": L, "status": "equal" if rep.equal else "mismatch",
                 "first_mismatch": rep.first_mismatch}]
    if t in ("p", "q") or (t[0] in "pq" and t[1:].isdigit() and 1 <= int(t[1:]) <= 10):
        names = [f"{t}{i}" for i in range(1, 11)] if t in ("p", "q") else [t]
        enum = lerw_outcome_series(L, u)
        out = []
        for nm in names:
            rep = compare(enum[nm[0]][int(nm[1:]) - 1], expand_closed_form(nm, u, L))
            out.append({"target": nm, "u": str(u), "L": L,
                        "status": "equal" if rep.equal else "mismatch",
                        "first_mismatch": rep.first_mismatch})
        return out
    raise ValueError(f"unknown verification target {target!r}")


VERIFY_TARGETS = ("phi", "xi", "p", "q") + tuple(f"p{i}" for i in range(1, 11)) + tuple(
    f"q{i}" for i in range(1, 11))
