"""Fixed point of the renormalization map, step weights of the LERW family,
the offspring polynomials and their spectral data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .closed_forms import Jet, Phi, eval_generating, p_weights, phi_pole, q_weights
from .loop_erasure import GAMMA1
from .path_space import _skeleton

__all__ = [
    "eval_generating", "parse_u", "fixed_point", "fixed_point_mp", "pole_estimate",
    "lambda_tilde", "StepWeights", "step_weights", "OFFSPRING", "HatPolynomials",
    "hat_polynomials", "iterate_hats", "SpectralData", "spectral",
]


def parse_u(u) -> Fraction:
    """Exact value of u from a Fraction, int, decimal string or "p/q"."""
    if isinstance(u, Fraction):
        val = u
    elif isinstance(u, float):
        val = Fraction(u).limit_denominator(10 ** 12) if math.isfinite(u) else None
    else:
        try:
            val = Fraction(str(u).strip())
        except (ValueError, ZeroDivisionError):
            val = None
    if val is None or val < 0:
        raise ValueError(f"u must be a nonnegative rational, got {u!r}")
    return val


def pole_estimate(u) -> float:
    return phi_pole(float(u))


def _bracket(u: float) -> tuple[float, float]:
    r = phi_pole(u)
    hi = 1.0 if math.isinf(r) else 0.999 * r
    for _ in range(40):
        if Phi(hi, u) - hi > 0.0:
            break
        hi = r - 0.1 * (r - hi)
    else:
        raise ArithmeticError(f"could not bracket the fixed point for u={u}")
    lo = 1e-8 * hi
    if Phi(lo, u) - lo >= 0.0:
        raise ArithmeticError(f"could not bracket the fixed point for u={u}")
    return lo, hi


@lru_cache(maxsize=256)
def _fixed_point_float(u: float) -> float:
    lo, hi = _bracket(u)
    while hi - lo > 1e-15 * hi:
        mid = 0.5 * (lo + hi)
        if Phi(mid, u) - mid > 0.0:
            hi = mid
        else:
            lo = mid
    x = 0.5 * (lo + hi)
    j = Phi(Jet.variable(x), u)
    step = (j.val - x) / (j.der - 1.0)
    if abs(step) < 1e-12 * x:
        x -= step
    return x


def fixed_point(u) -> float:
    """Positive solution x_u of Phi(x, u) = x below the pole of Phi."""
    return _fixed_point_float(float(parse_u(u)))


def fixed_point_mp(u, dps: int = 40):
    """High-precision fixed point (mpmath), same bracket as ``fixed_point``."""
    import mpmath

    uu = parse_u(u)
    with mpmath.workdps(dps):
        um = mpmath.mpf(uu.numerator) / uu.denominator
        lo, hi = (mpmath.mpf(v) for v in _bracket(float(uu)))
        tol = mpmath.mpf(10) ** (-dps + 3)
        while hi - lo > tol * hi:
            mid = (lo + hi) / 2
            if Phi(mid, um) - mid > 0:
                hi = mid
            else:
                lo = mid
        return (lo + hi) / 2


def lambda_tilde(u) -> float:
    """d Phi / dx at the fixed point."""
    uf = float(parse_u(u))
    return Phi(Jet.variable(fixed_point(uf)), uf).der


# ---------------------------------------------------------------------------
# step weights

def _offspring() -> np.ndarray:
    out = []
    for w in GAMMA1:
        sk = _skeleton(w, 1, 1)
        out.append(sk.counts())
    return np.array(out, dtype=np.int64)


OFFSPRING = _offspring()  # (s1, s2) of w*_1 .. w*_10


@dataclass(frozen=True)
class StepWeights:
    u: Fraction
    x_u: float
    lambda_tilde: float
    p: tuple[float, ...]
    q: tuple[float, ...]
    phi_hat: dict = field(default_factory=dict)
    theta_hat: dict = field(default_factory=dict)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.p), np.array(self.q)

    def to_dict(self) -> dict:
        return {"u": str(self.u), "x_u": self.x_u, "lambda_tilde": self.lambda_tilde,
                "p": list(self.p), "q": list(self.q)}


def _monomials(w) -> dict:
    out: dict = {}
    for c, (i, j) in zip(w, OFFSPRING):
        out[(int(i), int(j))] = out.get((int(i), int(j)), 0.0) + c
    return out


@lru_cache(maxsize=256)
def _step_weights(u: Fraction) -> StepWeights:
    uf = float(u)
    x = fixed_point(u)
    lt = Phi(Jet.variable(x), uf).der
    p = [float(v) for v in p_weights(x, uf)]
    q = [float(v) for v in q_weights(x, uf)]
    p[7] = p[8] = p[9] = 0.0
    for name, w in (("p", p), ("q", q)):
        if min(w) < -1e-12:
            raise ArithmeticError(f"negative {name} weight {min(w)!r} at u={u}")
        if abs(sum(w) - 1.0) > 1e-10:
            raise ArithmeticError(f"{name} weights sum to {sum(w)!r} at u={u}")
    p = [max(v, 0.0) for v in p]
    q = [max(v, 0.0) for v in q]
    return StepWeights(u, x, lt, tuple(p), tuple(q), _monomials(p), _monomials(q))


def step_weights(u) -> StepWeights:
    """x_u, lambda-tilde and the p, q tables at the fixed point."""
    return _step_weights(parse_u(u))


# ---------------------------------------------------------------------------
# offspring polynomials

@dataclass(frozen=True)
class HatPolynomials:
    """Phi-hat and Theta-hat as coefficient tables {(i, j): c} of x^i y^j."""

    phi: dict
    theta: dict

    @staticmethod
    def _eval(table, x, y):
        return sum(c * x ** i * y ** j for (i, j), c in table.items())

    def phi_hat(self, x, y):
        return self._eval(self.phi, x, y)

    def theta_hat(self, x, y):
        return self._eval(self.theta, x, y)

    def __call__(self, x, y):
        return self.phi_hat(x, y), self.theta_hat(x, y)

    def jacobian(self, x=1.0, y=1.0) -> np.ndarray:
        def grad(t):
            gx = sum(c * i * x ** (i - 1) * y ** j for (i, j), c in t.items() if i)
            gy = sum(c * j * x ** i * y ** (j - 1) for (i, j), c in t.items() if j)
            return [gx, gy]
        return np.array([grad(self.phi), grad(self.theta)], dtype=float)


def hat_polynomials(u) -> HatPolynomials:
    sw = u if isinstance(u, StepWeights) else step_weights(u)
    return HatPolynomials(dict(sw.phi_hat), dict(sw.theta_hat))


def iterate_hats(u, N: int, x, y):
    """(Phi-hat_N, Theta-hat_N)(x, y) by N-fold composition, pointwise."""
    if N < 1:
        raise ValueError("N must be at least 1")
    h = u if isinstance(u, HatPolynomials) else hat_polynomials(u)
    for _ in range(N):
        x, y = h(x, y)
    return x, y


# ---------------------------------------------------------------------------
# spectral data

@dataclass(frozen=True)
class SpectralData:
    mean_matrix: np.ndarray
    lam: float
    right_vec: np.ndarray
    left_vec: np.ndarray
    nu: float
    hausdorff_dim: float

    def to_dict(self) -> dict:
        return {"mean_matrix": self.mean_matrix.tolist(), "lambda": self.lam,
                "right_vec": self.right_vec.tolist(), "left_vec": self.left_vec.tolist(),
                "nu": self.nu, "hausdorff_dim": self.hausdorff_dim}


def mean_matrix(sw: StepWeights) -> np.ndarray:
    p, q = sw.as_arrays()
    return np.array([p @ OFFSPRING, q @ OFFSPRING], dtype=float)


def spectral(u) -> SpectralData:
    """Mean matrix, its Perron root and eigenvectors, nu and the dimension."""
    sw = u if isinstance(u, StepWeights) else step_weights(u)
    M = mean_matrix(sw)
    (m11, m12), (m21, m22) = M
    tr, det = m11 + m22, m11 * m22 - m12 * m21
    lam = float(0.5 * tr + math.sqrt(0.25 * tr * tr - det))
    r = np.array([m12, lam - m11]) if abs(m12) > 1e-300 else np.array([lam - m22, m21])
    v = np.array([m21, lam - m11]) if abs(m21) > 1e-300 else np.array([lam - m22, m12])
    r = r / r.sum()
    v = v / (r @ v)
    nu = math.log(2.0) / math.log(lam)
    return SpectralData(M, lam, r, v, nu, 1.0 / nu)
