"""Closed-form generating functions and LERW step weights.

Every function here is written once and works for any number-like ``x``
and ``u`` supporting ``+ - * /`` and integer powers: floats, ``Fraction``,
``mpmath.mpf``, the first-order ``Jet`` below and ``TruncatedSeries``.
Expressions follow the printed formulas factor by factor; the only liberty
taken is naming repeated factors once per function.
"""

from __future__ import annotations

import math
from fractions import Fraction


class Jet:
    """Value plus first derivative, propagated through arithmetic."""

    __slots__ = ("val", "der")

    def __init__(self, val, der=0):
        self.val = val
        self.der = der

    @classmethod
    def variable(cls, x):
        return cls(x, 1.0 if isinstance(x, float) else type(x)(1))

    def _lift(self, o):
        return o if isinstance(o, Jet) else Jet(o, 0)

    def __add__(self, o):
        o = self._lift(o)
        return Jet(self.val + o.val, self.der + o.der)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.der)

    def __pos__(self):
        return self

    def __sub__(self, o):
        o = self._lift(o)
        return Jet(self.val - o.val, self.der - o.der)

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, o):
        o = self._lift(o)
        return Jet(self.val * o.val, self.der * o.val + self.val * o.der)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._lift(o)
        q = self.val / o.val
        return Jet(q, (self.der - q * o.der) / o.val)

    def __rtruediv__(self, o):
        return self._lift(o) / self

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("jets support nonnegative integer powers only")
        if n == 0:
            return Jet(self.val ** 0, 0 * self.der)
        return Jet(self.val ** n, n * self.val ** (n - 1) * self.der)

    def __repr__(self):
        return f"Jet({self.val!r}, {self.der!r})"


# ---------------------------------------------------------------------------
# generating functions

def phi_denominator(x, u):
    return (1 + u * x) * (1 - 2 * u * x) - 4 * u ** 2 * x ** 2 * (
        1 + 2 * (1 - u ** 2) * x ** 2 - 2 * u * (1 - u) ** 2 * x ** 3)


def Phi(x, u):
    """Total weight of W_1 paths, sum of u^(N+M) x^len."""
    num = x ** 2 * (1 + (1 + u) * x - u * (1 - u ** 2) * x ** 2 + 2 * (1 - u) ** 2 * u ** 2 * x ** 3)
    return num / phi_denominator(x, u)


def Xi(x, u):
    """Weight of single loops at O confined to one half of F_1."""
    D = (1 + u * x) * (1 - 2 * u * x)
    return 2 * u * x ** 2 / D * (1 + 2 * (1 - u ** 2) * x ** 2 - 2 * (1 - u) ** 2 * u * x ** 3)


def Ell(x, u):
    return u * x ** 2 + u * x ** 4 / (1 - u ** 2 * x ** 2)


def Sigma(x, u):
    return 2 * u * x ** 2 / (1 - u * x)


GENERATING = {"Phi": Phi, "Xi": Xi, "Ell": Ell, "Sigma": Sigma}


def p_weights(x, u) -> list:
    """p_1..p_10 as functions of (x, u)."""
    R = 1 - 2 * u * Xi(x, u)
    D = (1 + u * x) * (1 - 2 * u * x)
    E = 1 - u ** 2 * x ** 2
    A = 1 + u * (1 + u) * x ** 2 / D
    B = 1 + u ** 2 * (1 + u) * x ** 2 / D
    p1 = x / R * (1 + u ** 2 * x ** 2 * ((1 - u) ** 2 * x + 2) / D)
    p2 = u * x ** 2 / R * A * (1 + u ** 3 * x ** 2 / E)
    p3 = u * x ** 2 / R * B * (1 + u * x ** 2 / E)
    p4 = u ** 3 * x ** 3 / (R * E) * A
    p5 = u ** 2 * x ** 3 / (R * E) * B
    p6 = u ** 2 * x ** 3 / (R * E) * A
    p7 = x ** 2 / R * B * (1 + u ** 3 * x ** 2 / E)
    zero = 0 * x
    return [p1, p2, p3, p4, p5, p6, p7, zero, zero, zero]


def q_prime_weights(x, u, printed_q2: bool = False) -> list:
    """q'_1..q'_10.  ``printed_q2`` reproduces a misprinted (1 - 2x) factor in
    q'_2 instead of (1 - 2ux); the two agree only at u = 1."""
    X = Xi(x, u)
    R = 1 - 2 * u * X
    D = (1 + u * x) * (1 - 2 * u * x)
    E = 1 - u ** 2 * x ** 2
    Rl = 1 - u * (Ell(x, u) + X)
    Rs = 1 - u * (Sigma(x, u) + X)
    Ru = 1 - u * (u * x ** 2 + X)
    H = 1 + u * x + u ** 2 * x ** 2 / D * (2 * (u ** 2 - u + 1) * x + 3)
    K = 1 + u ** 2 * x * (1 + 2 * x) / D
    K1 = 1 + u * x * (1 + 2 * x) / D
    A = 1 + u * (1 + u) * x ** 2 / D
    B = 1 + u ** 2 * (1 + u) * x ** 2 / D
    S = 1 + u ** 2 * x / (1 - u * x)

    K2 = 1 + u ** 2 * x * (1 + 2 * x) / ((1 + u * x) * (1 - 2 * x)) if printed_q2 else K
    q1 = (1 + u) ** 2 * x ** 6 / R * K ** 2
    q2 = (x ** 5 * H / R * K2 * (1 + u ** 3 * x ** 2 / E + u ** 3 * x ** 4 / E ** 2 / Rl)
          + u ** 3 * x ** 7 / (E ** 2 * Rl) * A)
    q3 = (2 * u * (1 + u) * x ** 7 / R * K ** 2
          * (u + u ** 2 * x ** 2 / E + u / Rs * x ** 2 / (1 - u * x) * S)
          + x ** 5 / Rs * B / (1 - u * x) * S)
    q4 = (u ** 2 * x ** 6 / R * H * K / E * (1 + u ** 2 * x ** 4 / (E * Rl)) * (1 + x ** 2 / Ru)
          + u ** 4 * x ** 8 / (E ** 2 * Rl) * A * (1 + x ** 2 / Ru)
          + u ** 2 * x ** 6 / (E * Ru) * A)
    q5 = (u ** 3 * x ** 6 / R * H * K1 * ((1 + u * x ** 2 / E) * u * x ** 2 / (E * Rl) + 1 / E)
          + u ** 2 * x ** 6 * B * (1 + u * x ** 2 / E) / Rl / E)
    q6 = (2 * u * (1 + u) * x ** 8 * K ** 2 / R
          * (S * u / Rs * u * x ** 2 / (1 - u * x) + u / E) * (1 + u ** 2 * x ** 2 / Ru)
          + u ** 2 * x ** 6 * A * S / Rs / (1 - u * x) * (1 + u ** 2 * x ** 2 / Ru)
          + u ** 3 * x ** 6 * A / E / Ru)
    q7 = (u * x ** 5 / R * H * K1 * ((1 + u * x ** 2 / E) * u ** 2 * x ** 2 / E / Rl
                                     + (1 + u ** 3 * x ** 2 / E))
          + u * x ** 5 * B * (1 + u * x ** 2 / E) / Rl / E)
    q8 = ((u ** 2 * x ** 4 * H / R * (1 + u * x + x ** 2 * ((4 * u ** 2 - 2 * u) * x + u ** 2 + 2) / D)
           + x ** 2 * (1 + u ** 2 * x ** 2 / D * ((1 - u) ** 2 * x + 2))) / Rl * x ** 2 / E)
    q9 = u * x * q8
    tail = x * S / Rs * u ** 2 * x ** 2 / (1 - u * x) + x + u ** 3 * x ** 3 / E
    q10 = (2 * u * (1 + u) * x ** 6 * K ** 2 / R * tail * u * x ** 2 / Ru
           + u * x ** 2 * A * tail * x ** 2 / Ru)
    return [q1, q2, q3, q4, q5, q6, q7, q8, q9, q10]


def q_weights(x, u, printed_q2: bool = False) -> list:
    """q_i = q'_i / (x^2 (1 - 2u Xi))."""
    R = 1 - 2 * u * Xi(x, u)
    return [qp / (x ** 2 * R) for qp in q_prime_weights(x, u, printed_q2)]


# ---------------------------------------------------------------------------
# pole location

def phi_pole(u: float, tol: float = 1e-15) -> float:
    """Smallest positive zero of the denominator of Phi (inf for u = 0).

    The denominator equals 1 at x = 0 and -(1+u)^2/(4u^2) at x = 1/(2u), so a
    sign scan on (0, 1/(2u)] followed by bisection locates the first zero.
    """
    u = float(u)
    if u == 0.0:
        return math.inf
    hi = 1.0 / (2.0 * u)
    n = 512
    prev_x = 0.0
    for k in range(1, n + 1):
        xk = hi * k / n
        fk = phi_denominator(xk, u)
        if fk <= 0.0:
            lo, up = prev_x, xk
            break
        prev_x = xk
    else:  # pragma: no cover - excluded by the sign argument above
        raise ArithmeticError(f"no sign change of the denominator for u={u}")
    while up - lo > tol * up:
        mid = 0.5 * (lo + up)
        if phi_denominator(mid, u) > 0.0:
            lo = mid
        else:
            up = mid
    return 0.5 * (lo + up)


def check_below_pole(x, u, rel: float = 1e-12) -> None:
    xv = float(x.val if isinstance(x, Jet) else x)
    r = phi_pole(float(u))
    if xv >= r * (1.0 - rel):
        raise OverflowError(f"x={xv!r} is at or beyond the pole {r!r} of Phi for u={float(u)!r}")


def _coerce(x, u, mode: str):
    if mode == "float":
        return float(x), float(u)
    if mode == "rational":
        return Fraction(x), Fraction(u)
    if mode == "jet":
        return Jet.variable(float(x)), float(u)
    raise ValueError(f"unknown mode {mode!r}")


def eval_generating(name: str, x, u, mode: str = "float"):
    """Evaluate Phi, Xi, Ell or Sigma; jet mode returns Jet(value, d/dx)."""
    try:
        f = GENERATING[name]
    except KeyError:
        raise ValueError(f"unknown generating function {name!r}") from None
    check_below_pole(x, u)
    xx, uu = _coerce(x, u, mode)
    return f(xx, uu)
