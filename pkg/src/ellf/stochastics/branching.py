"""Two-type branching process of skeleton triangle counts and its
normalized limit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..renormalization import OFFSPRING, spectral, step_weights

WEIGHT = np.array([1, 2])  # steps per Type 1 / Type 2 triangle


@dataclass(frozen=True)
class BranchState:
    S1: int
    S2: int

    @property
    def total(self) -> int:
        return self.S1 + self.S2

    def as_array(self) -> np.ndarray:
        return np.array([self.S1, self.S2])


def _probs(u):
    p, q = step_weights(u).as_arrays()
    return p / p.sum(), q / q.sum()


def branching_step(S: np.ndarray, p: np.ndarray, q: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One generation for a (reps, 2) array of populations."""
    c1 = rng.multinomial(S[:, 0], p)
    c2 = rng.multinomial(S[:, 1], q)
    return (c1 + c2) @ OFFSPRING


def start_state(start_type: int, reps: int) -> np.ndarray:
    if start_type not in (1, 2):
        raise ValueError("start_type must be 1 or 2")
    S = np.zeros((reps, 2), dtype=np.int64)
    S[:, start_type - 1] = 1
    return S


def simulate_branching_batch(u, start_type: int, N: int, reps: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Populations of ``reps`` independent trajectories, shape (reps, N + 1, 2)."""
    p, q = _probs(u)
    S = start_state(start_type, reps)
    out = np.empty((reps, N + 1, 2), dtype=np.int64)
    out[:, 0] = S
    for n in range(1, N + 1):
        S = branching_step(S, p, q, rng)
        out[:, n] = S
    return out


def simulate_branching(u, start_type: int, N: int, rng: np.random.Generator) -> list[BranchState]:
    traj = simulate_branching_batch(u, start_type, N, 1, rng)[0]
    return [BranchState(int(a), int(b)) for a, b in traj]


def expected_population(u, start_type: int, N: int) -> np.ndarray:
    M = spectral(u).mean_matrix
    return start_state(start_type, 1)[0] @ np.linalg.matrix_power(M, N)


@dataclass
class BEstimate:
    start_type: int
    N: int
    samples: np.ndarray  # B_i
    target: float  # u_i

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def stderr(self) -> float:
        return float(self.samples.std(ddof=1) / np.sqrt(len(self.samples)))

    def to_dict(self) -> dict:
        qs = np.quantile(self.samples, [0.001, 0.01, 0.1, 0.5, 0.9, 0.99, 0.999])
        return {"start_type": self.start_type, "N": self.N, "reps": len(self.samples),
                "mean": self.mean, "stderr": self.stderr, "variance": float(self.samples.var(ddof=1)),
                "target": self.target, "min": float(self.samples.min()),
                "quantiles": dict(zip(["0.001", "0.01", "0.1", "0.5", "0.9", "0.99", "0.999"],
                                      map(float, qs)))}


def final_populations(u, start_type: int, N: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    p, q = _probs(u)
    S = start_state(start_type, reps)
    for _ in range(N):
        S = branching_step(S, p, q, rng)
    return S


def estimate_B(u, N: int, reps: int, rng: np.random.Generator) -> dict[int, BEstimate]:
    """Samples of lambda^-N (S^N . (1,2)) / (v_1 + 2 v_2) for both start types."""
    sp = spectral(u)
    norm = sp.lam ** (-N) / float(sp.left_vec @ WEIGHT)
    out = {}
    for i in (1, 2):
        S = final_populations(u, i, N, reps, rng)
        out[i] = BEstimate(i, N, norm * (S @ WEIGHT), float(sp.right_vec[i - 1]))
    return out


def tail_slope(btilde: np.ndarray, p_range=(1e-3, 1e-2)) -> float:
    """Slope of log(-log P[B~ <= x]) against log(1/x) over the lower tail.

    The empirical CDF is evaluated at sample points whose rank falls in
    ``p_range``.
    """
    x = np.sort(btilde)
    n = len(x)
    F = np.arange(1, n + 1) / (n + 1)
    keep = (F >= p_range[0]) & (F <= p_range[1])
    if keep.sum() < 3:
        raise ValueError("not enough samples in the tail window")
    return float(np.polyfit(np.log(1.0 / x[keep]), np.log(-np.log(F[keep])), 1)[0])


def predicted_tail_slope(u) -> float:
    nu = spectral(u).nu
    return nu / (1.0 - nu)
