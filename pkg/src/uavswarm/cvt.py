"""Probabilistic generalized Lloyd iteration and target assignment.

Cells are estimated from uniform random samples of the region (no exact
Voronoi geometry). Seeds live in the region's own dimension (2 for a planar
barrier, 3 for a box); callers lift them into the world frame.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid user-supplied configuration."""


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle or box with uniform density."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    density: str = "uniform"

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or len(self.lo) not in (2, 3):
            raise ConfigError("region corners must both be 2D or both 3D")
        if any(not a < b for a, b in zip(self.lo, self.hi)):
            raise ConfigError(f"region min corner must be < max corner: {self.lo} vs {self.hi}")
        if self.density != "uniform":
            raise ConfigError(f"unsupported density {self.density!r}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def clamp(self, pts: np.ndarray) -> np.ndarray:
        return np.clip(pts, self.lo, self.hi)


@dataclass(frozen=True)
class LloydParams:
    n: int
    s_num: int | None = None  # defaults to 100 * n
    a1: float = 0.5
    a2: float = 0.5
    b1: float = 0.5
    b2: float = 0.5
    max_iter: int = 500
    move_tol: float = 1e-3
    rng_seed: int = 0
    energy_samples: int = 50_000
    stall_rtol: float = 2e-3  # 0 disables the stall stop

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"seed count must be positive (got {self.n})")
        if self.samples < self.n:
            raise ConfigError(f"S_num ({self.samples}) must be >= N ({self.n})")
        if abs(self.a1 + self.a2 - 1.0) > 1e-12 or abs(self.b1 + self.b2 - 1.0) > 1e-12:
            raise ConfigError("Lloyd constants must satisfy a1 + a2 = 1 and b1 + b2 = 1")
        if self.a2 <= 0 or self.b2 <= 0:
            raise ConfigError("Lloyd constants a2 and b2 must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        if self.move_tol < 0:
            raise ConfigError("move_tol must be non-negative")
        if self.stall_rtol < 0:
            raise ConfigError("stall_rtol must be non-negative")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be unsigned")

    @property
    def samples(self) -> int:
        return self.s_num if self.s_num is not None else 100 * self.n


@dataclass(frozen=True)
class CvtCell:
    seed: np.ndarray
    counter: int
    sample_mean: np.ndarray | None
    mass: float
    centroid: np.ndarray | None


@dataclass
class LloydState:
    """Vectorized cell set: row ``i`` of every array belongs to cell ``i``."""

    seeds: np.ndarray
    counters: np.ndarray
    means: np.ndarray = field(default=None)
    masses: np.ndarray = field(default=None)

    def __post_init__(self):
        n, d = self.seeds.shape
        if self.means is None:
            self.means = np.full((n, d), np.nan)
        if self.masses is None:
            self.masses = np.zeros(n)

    @classmethod
    def from_seeds(cls, seeds: np.ndarray) -> "LloydState":
        seeds = np.array(seeds, dtype=float)
        return cls(seeds=seeds, counters=np.ones(len(seeds), dtype=np.int64))

    def cell(self, i: int) -> CvtCell:
        mean = None if np.isnan(self.means[i]).any() else self.means[i].copy()
        return CvtCell(self.seeds[i].copy(), int(self.counters[i]), mean, float(self.masses[i]), mean)


def nearest_seed(points: np.ndarray, seeds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest seed per point (ties -> lowest index) and squared distance."""
    d2 = ((points[:, None, :] - seeds[None, :, :]) ** 2).sum(axis=2)
    idx = np.argmin(d2, axis=1)
    return idx, d2[np.arange(len(points)), idx]


def lloyd_iterate(state: LloydState, region: Region, params: LloydParams,
                  rng: np.random.Generator) -> LloydState:
    """One sampling + point-update sweep. Mutates and returns ``state``."""
    samples = region.sample(rng, params.samples)
    owner, _ = nearest_seed(samples, state.seeds)
    counts = np.bincount(owner, minlength=len(state.seeds))
    sums = np.zeros_like(state.seeds)
    np.add.at(sums, owner, samples)
    hit = counts > 0
    u = sums[hit] / counts[hit, None]
    j = state.counters[hit].astype(float)
    w_old = (params.a1 * j + params.b1) / (j + 1)
    w_new = (params.a2 * j + params.b2) / (j + 1)
    state.seeds[hit] = w_old[:, None] * state.seeds[hit] + w_new[:, None] * u
    state.counters[hit] += 1
    state.means[hit] = u
    state.masses = counts * region.volume / params.samples
    return state


def distortion(seeds: np.ndarray, samples: np.ndarray, volume: float = 1.0) -> float:
    """Monte-Carlo estimate of the squared-distance distortion energy."""
    d2 = (samples ** 2).sum(1)[:, None] - 2.0 * samples @ seeds.T + (seeds ** 2).sum(1)[None, :]
    return float(np.maximum(d2.min(axis=1), 0.0).mean() * volume)


@dataclass
class LloydResult:
    """Outcome of :func:`run_lloyd`.

    ``history[k]``, ``energy[k]`` and ``displacement[k]`` describe the seeds
    after iteration ``k + 1``. ``seeds`` is ``history[iterations - 1]``.
    """

    seeds: np.ndarray
    iterations: int
    converged: bool
    stop_reason: str
    energy: list[float]
    displacement: list[float]
    history: list[np.ndarray]


def run_lloyd(region: Region, params: LloydParams, init: np.ndarray | None = None) -> LloydResult:
    """Iterate Lloyd sweeps until converged, stalled or out of iterations.

    Convergence means the largest per-iteration seed move fell below
    ``move_tol``. With fixed blending weights the sampling noise keeps seeds
    jittering, so the run also stops once an iteration lowers the distortion
    (evaluated on one fixed sample set from an independent stream) by less
    than ``stall_rtol`` relative; the result is then rolled back to the
    lowest-energy iterate.
    """
    ss = np.random.SeedSequence(params.rng_seed)
    algo_ss, eval_ss = ss.spawn(2)
    rng = np.random.default_rng(algo_ss)
    eval_pts = region.sample(np.random.default_rng(eval_ss), params.energy_samples)
    if init is None:
        init = region.sample(rng, params.n)
    state = LloydState.from_seeds(region.clamp(np.asarray(init, dtype=float)))
    energy, moves, history = [], [], []
    best = 0
    reason = "max_iter"
    for k in range(params.max_iter):
        prev = state.seeds.copy()
        lloyd_iterate(state, region, params, rng)
        state.seeds = region.clamp(state.seeds)
        moves.append(float(np.linalg.norm(state.seeds - prev, axis=1).max()))
        energy.append(distortion(state.seeds, eval_pts, region.volume))
        history.append(state.seeds.copy())
        if energy[k] < energy[best]:
            best = k
        if moves[k] < params.move_tol:
            reason = "move_tol"
            break
        if params.stall_rtol and k > 0 and energy[k - 1] - energy[k] < params.stall_rtol * energy[k - 1]:
            reason = "stall"
            break
    if reason == "stall":
        energy, moves, history = energy[:best + 1], moves[:best + 1], history[:best + 1]
    elif reason == "max_iter":
        log.warning("Lloyd iteration did not converge within %d iterations (last move %.3g)",
                    params.max_iter, moves[-1])
    return LloydResult(history[-1].copy(), len(history), reason == "move_tol", reason,
                       energy, moves, history)


def assign_targets(positions, seeds, method: str = "optimal") -> np.ndarray:
    """Map agent index -> seed index.

    ``optimal`` minimizes the total squared distance; ``greedy`` repeatedly
    takes the globally closest free (agent, seed) pair.
    """
    p = np.asarray(positions, dtype=float)
    s = np.asarray(seeds, dtype=float)
    if len(p) != len(s):
        raise ConfigError(f"need as many seeds as agents ({len(s)} vs {len(p)})")
    cost = ((p[:, None, :] - s[None, :, :]) ** 2).sum(axis=2)
    if method == "optimal":
        rows, cols = linear_sum_assignment(cost)
        out = np.empty(len(p), dtype=np.int64)
        out[rows] = cols
        return out
    if method == "greedy":
        out = np.full(len(p), -1, dtype=np.int64)
        order = sorted(itertools.product(range(len(p)), range(len(s))), key=lambda ij: (cost[ij], ij))
        used = set()
        for i, j in order:
            if out[i] < 0 and j not in used:
                out[i] = j
                used.add(j)
        return out
    raise ConfigError(f"unknown assignment method {method!r}")


def assignment_cost(positions, seeds, mapping) -> float:
    p = np.asarray(positions, dtype=float)
    s = np.asarray(seeds, dtype=float)
    return float(sum(((p[i] - s[mapping[i]]) ** 2).sum() for i in range(len(p))))


def monte_carlo_centroids(seeds: np.ndarray, region: Region, n_samples: int, seed: int) -> np.ndarray:
    """Cell centroids from a fresh sample set; NaN rows for empty cells."""
    pts = region.sample(np.random.default_rng(seed), n_samples)
    owner, _ = nearest_seed(pts, seeds)
    counts = np.bincount(owner, minlength=len(seeds))
    sums = np.zeros_like(seeds)
    np.add.at(sums, owner, pts)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts[:, None]


__all__ = [
    "ConfigError", "Region", "LloydParams", "CvtCell", "LloydState", "LloydResult",
    "lloyd_iterate", "run_lloyd", "assign_targets", "assignment_cost", "distortion",
    "nearest_seed", "monte_carlo_centroids"
]
