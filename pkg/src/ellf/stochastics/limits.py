"""Laplace transforms of the branching limits, displacement moments and
the iterated-logarithm diagnostic."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from ..gasket_geometry import cartesian_array
from ..renormalization import OFFSPRING, parse_u, spectral, step_weights
from .lerw import TriangleChain, lerw_chain

SEED_THRESHOLD = 1e-6


def second_moments(u) -> np.ndarray:
    """E[B_i^2] from the linear system (I - M / lam^2) m = c / lam^2."""
    sp = spectral(u)
    lam, r = sp.lam, sp.right_vec
    c = np.zeros(2)
    for i, w in enumerate(step_weights(u).as_arrays()):
        w = w / w.sum()
        s1, s2 = OFFSPRING[:, 0], OFFSPRING[:, 1]
        c[i] = w @ (s1 * (s1 - 1) * r[0] ** 2 + 2 * s1 * s2 * r[0] * r[1] + s2 * (s2 - 1) * r[1] ** 2)
    return np.linalg.solve(np.eye(2) - sp.mean_matrix / lam ** 2, c / lam ** 2)


def _log_hat(logp: np.ndarray, lg1: np.ndarray, lg2: np.ndarray) -> np.ndarray:
    """log of sum_k p_k g1^s1 g2^s2, computed stably."""
    e = logp[:, None] + np.outer(OFFSPRING[:, 0], lg1) + np.outer(OFFSPRING[:, 1], lg2)
    m = e.max(axis=0)
    return m + np.log(np.exp(e - m).sum(axis=0))


@dataclass
class LaplaceTable:
    t: np.ndarray
    log_g1: np.ndarray
    log_g2: np.ndarray
    nu: float

    @property
    def g1(self):
        return np.exp(self.log_g1)

    @property
    def g2(self):
        return np.exp(self.log_g2)

    @property
    def h1(self):
        return -self.t ** (-self.nu) * self.log_g1

    @property
    def h2(self):
        return -self.t ** (-self.nu) * self.log_g2

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,g1,g2,h1,h2\n")
        for row in zip(self.t, self.g1, self.g2, self.h1, self.h2):
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


def laplace_g(u, t_grid, order: int = 1) -> LaplaceTable:
    """g_i(t) = E exp(-t B_i) by upward iteration of the offspring maps.

    Each t is pulled down to s = t / lam^n <= 1e-6, seeded with
    1 - u_i s (plus E[B_i^2] s^2 / 2 when ``order`` is 2) and pushed back up
    through g(lam s) = (Phi-hat, Theta-hat)(g(s)).
    """
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t_grid must be positive")
    sp = spectral(u)
    lam, r = sp.lam, sp.right_vec
    with np.errstate(divide="ignore"):
        logp, logq = (np.log(w / w.sum()) for w in step_weights(u).as_arrays())
    n = np.maximum(0, np.ceil(np.log(t / SEED_THRESHOLD) / math.log(lam))).astype(int)
    s = t / lam ** n
    g1, g2 = 1 - r[0] * s, 1 - r[1] * s
    if order == 2:
        m2 = second_moments(u)
        g1, g2 = g1 + 0.5 * m2[0] * s * s, g2 + 0.5 * m2[1] * s * s
    lg1, lg2 = np.log(g1), np.log(g2)
    for k in range(int(n.max()) if len(n) else 0):
        act = n > k
        a1, a2 = _log_hat(logp, lg1[act], lg2[act]), _log_hat(logq, lg1[act], lg2[act])
        lg1[act], lg2[act] = a1, a2
    return LaplaceTable(t, lg1, lg2, sp.nu)


def laplace_residuals(u, t_grid) -> np.ndarray:
    """max over i of |g_i(lam t) - hat_i(g_1(t), g_2(t))| per grid point."""
    t = np.asarray(t_grid, dtype=float)
    lam = spectral(u).lam
    lo, hi = laplace_g(u, t), laplace_g(u, lam * t)
    p, q = step_weights(u).as_arrays()
    g1, g2 = lo.g1, lo.g2
    m1 = np.power.outer(g1, OFFSPRING[:, 0]) * np.power.outer(g2, OFFSPRING[:, 1])
    return np.maximum(np.abs(hi.g1 - m1 @ p), np.abs(hi.g2 - m1 @ q))


# ---------------------------------------------------------------------------
# displacement moments

def positions_at(ch: TriangleChain, times: np.ndarray, lam: float) -> np.ndarray:
    """|X_N(t)| for every sample at each time, shape (reps, len(times))."""
    pts, off = ch.vertex_arrays()
    xy = cartesian_array(pts, ch.level)
    nsteps = np.diff(off) - 1
    k = np.asarray(times, dtype=float) * lam ** ch.level
    j = np.floor(k + 1e-9).astype(np.int64)
    k = np.maximum(k, j)
    frac = k - j
    jj = np.minimum(j[None, :], nsteps[:, None])
    j2 = np.minimum(jj + 1, nsteps[:, None])
    f = np.where(jj < nsteps[:, None], frac[None, :], 0.0)
    a = xy[off[:-1, None] + jj]
    b = xy[off[:-1, None] + j2]
    pos = a + f[..., None] * (b - a)
    return np.sqrt((pos ** 2).sum(axis=-1))


def running_max_at(ch: TriangleChain, times: np.ndarray, lam: float) -> np.ndarray:
    """sup_{s <= t} |X_N(s)| for every sample, read on the vertex grid."""
    pts, off = ch.vertex_arrays()
    xy = cartesian_array(pts, ch.level)
    r = np.sqrt((xy ** 2).sum(axis=1))
    rep = np.repeat(np.arange(ch.reps), np.diff(off))
    # segmented cumulative max: lift each sample above all earlier ones
    lifted = r + 4.0 * rep
    cm = np.maximum.accumulate(lifted) - 4.0 * rep
    nsteps = np.diff(off) - 1
    j = np.floor(np.asarray(times, dtype=float) * lam ** ch.level + 1e-9).astype(np.int64)
    jj = np.minimum(j[None, :], nsteps[:, None])
    return cm[off[:-1, None] + jj]


@dataclass
class DisplacementFit:
    u: float
    N: int
    reps: int
    p_moment: float
    t: np.ndarray
    moment: np.ndarray
    stderr: np.ndarray
    slope: float
    intercept: float
    nu: float

    @property
    def fit(self) -> np.ndarray:
        return np.exp(self.intercept) * self.t ** self.slope

    @property
    def relative_error(self) -> float:
        return abs(self.slope / (self.p_moment * self.nu) - 1.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,moment,fit\n")
        for row in zip(self.t, self.moment, self.fit):
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"u": self.u, "N": self.N, "reps": self.reps, "p": self.p_moment,
                "slope": self.slope, "target": self.p_moment * self.nu, "nu": self.nu,
                "relative_error": self.relative_error,
                "t": self.t.tolist(), "moment": self.moment.tolist(), "stderr": self.stderr.tolist()}


def default_times(u, N: int) -> np.ndarray:
    """t = lam^-k for k = 2 .. N - 3: away from the end point and from lattice effects."""
    lam = spectral(u).lam
    return lam ** -np.arange(2.0, max(N - 2, 4))


def displacement_stats(u, N: int, reps: int, p_moment: float, rng: np.random.Generator,
                       times=None, chunk: int = 500) -> DisplacementFit:
    """E[|X_N(t)|^p] on a geometric grid and its fitted log-log slope."""
    sp = spectral(u)
    times = default_times(u, N) if times is None else np.asarray(times, dtype=float)
    acc = np.zeros(len(times))
    acc2 = np.zeros(len(times))
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        d = positions_at(lerw_chain(u, N, m, rng), times, sp.lam) ** p_moment
        acc += d.sum(axis=0)
        acc2 += (d * d).sum(axis=0)
        done += m
    mean = acc / reps
    se = np.sqrt(np.maximum(acc2 / reps - mean ** 2, 0) / reps)
    slope, icpt = np.polyfit(np.log(times), np.log(mean), 1)
    return DisplacementFit(float(parse_u(u)), N, reps, p_moment, times, mean, se,
                           float(slope), float(icpt), sp.nu)


def psi(t, nu: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return t ** nu * np.log(np.log(1.0 / t)) ** (1.0 - nu)


def lil_diagnostic(u, N: int, reps: int, rng: np.random.Generator, times=None) -> dict:
    """Ratios sup_{s<=t}|X(s)| / psi(t) on t = lam^-k, k = 3 .. min(10, N - 1); report only."""
    sp = spectral(u)
    if times is None:
        times = sp.lam ** -np.arange(3.0, max(min(10, N - 1), 3) + 1.0)
    times = np.asarray(times, dtype=float)
    ch = lerw_chain(u, N, reps, rng)
    ratio = running_max_at(ch, times, sp.lam) / psi(times, sp.nu)[None, :]
    return {"u": float(parse_u(u)), "N": N, "reps": reps, "nu": sp.nu,
            "t": times.tolist(), "psi": psi(times, sp.nu).tolist(),
            "mean_ratio": ratio.mean(axis=0).tolist(),
            "max_ratio": ratio.max(axis=0).tolist(),
            "q99_ratio": np.quantile(ratio, 0.99, axis=0).tolist()}
