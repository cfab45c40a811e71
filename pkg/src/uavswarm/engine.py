"""Time-stepped simulation loop, trajectory log and run metrics."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import SimConfig
from .control import collision_accel, formation_accel, obstacle_accel, total_accel
from .cvt import ConfigError, assign_targets, run_lloyd
from .detect import ObstacleView
from .geom import EPS_SPEED
from .world import barrier_targets_at, building_proxy, obstacle_center_at

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    """Simulation state left the world box or went non-finite."""


@dataclass(frozen=True)
class UavState:
    id: int
    p: np.ndarray
    v: np.ndarray
    last_heading: float = 0.0


def integrate_step(state: UavState, u, dt: float) -> UavState:
    """Semi-implicit Euler: velocity first, then position with the new velocity."""
    if dt <= 0:
        raise ConfigError("dt must be positive")
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise DivergenceError(f"agent {state.id}: non-finite control input {u.tolist()}")
    v = state.v + u * dt
    p = state.p + v * dt
    heading = state.last_heading
    if math.hypot(v[0], v[1]) > EPS_SPEED:
        heading = math.atan2(v[1], v[0])
    return replace(state, p=p, v=v, last_heading=heading)


CSV_COLUMNS = ["t", "agent_id", "px", "py", "pz", "vx", "vy", "vz",
               "ufx", "ufy", "ufz", "ucx", "ucy", "ucz", "uox", "uoy", "uoz",
               "n_detected_obstacles", "n_active_neighbors"]


@dataclass
class TrajectoryLog:
    """Per-step arrays; leading axis is time, second is agent (or obstacle)."""

    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    u_f: np.ndarray
    u_c: np.ndarray
    u_o: np.ndarray
    n_detected: np.ndarray
    n_active: np.ndarray
    obstacle_centers: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 3)))
    targets: np.ndarray | None = None  # per-agent world targets at t = 0
    lloyd_iterations: int = 0

    @property
    def u_total(self) -> np.ndarray:
        return self.u_f + self.u_c + self.u_o

    @property
    def n_agents(self) -> int:
        return self.p.shape[1]

    def rows(self):
        for k, t in enumerate(self.t):
            for i in range(self.n_agents):
                yield (t, i, *self.p[k, i], *self.v[k, i], *self.u_f[k, i], *self.u_c[k, i],
                       *self.u_o[k, i], self.n_detected[k, i], self.n_active[k, i])

    def to_csv(self, path) -> None:
        Path(path).write_text(self.csv_text(), encoding="utf-8")

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows():
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else int(x) for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        """Parse a trajectory CSV; raises ``ValueError`` when malformed."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != CSV_COLUMNS:
                raise ValueError(f"unexpected trajectory header: {header}")
            rows = [r for r in reader if r]
        if not rows:
            z3 = np.zeros((0, 0, 3))
            return cls(np.zeros(0), z3, z3, z3, z3, z3, np.zeros((0, 0), int), np.zeros((0, 0), int))
        try:
            data = np.array(rows, dtype=float)
        except ValueError as exc:
            raise ValueError(f"non-numeric trajectory field: {exc}") from exc
        if data.shape[1] != len(CSV_COLUMNS):
            raise ValueError("ragged trajectory rows")
        n = int(data[:, 1].max()) + 1
        if len(data) % n:
            raise ValueError("trajectory rows are not a whole number of steps")
        d = data.reshape(-1, n, len(CSV_COLUMNS))
        if not np.array_equal(d[:, :, 1], np.tile(np.arange(n), (len(d), 1))):
            raise ValueError("agent ids out of order")
        return cls(d[:, 0, 0], d[..., 2:5], d[..., 5:8], d[..., 8:11], d[..., 11:14], d[..., 14:17],
                   d[..., 17].astype(int), d[..., 18].astype(int))


def sample_initial_positions(config: SimConfig) -> np.ndarray:
    init = config.init
    rng = np.random.default_rng(config.init_seed)
    cov = init.cov_matrix()
    n = config.n_agents
    for _ in range(init.max_attempts):
        xy = rng.multivariate_normal(init.mean, cov, size=n)
        if n == 1 or init.min_separation == 0:
            break
        d = np.linalg.norm(xy[:, None] - xy[None], axis=2)
        if d[np.triu_indices(n, 1)].min() >= init.min_separation:
            break
    else:
        raise ConfigError(f"could not draw {n} initial positions {init.min_separation} m apart "
                          f"in {init.max_attempts} attempts")
    return np.column_stack([xy, np.full(n, init.z)])


def formation_targets(config: SimConfig, positions: np.ndarray, seed: int | None = None):
    """Lloyd seeds on the barrier, assigned to agents. Returns (barrier-local targets, iterations)."""
    result = run_lloyd(config.region(), config.lloyd_params(seed))
    mapping = assign_targets(positions[:, :2], result.seeds, config.lloyd.assignment)
    return result.seeds[mapping], result.iterations


def run_scenario(config: SimConfig) -> TrajectoryLog:
    """Deploy, assign and fly the configured scenario. Deterministic for fixed seeds."""
    n, steps, dt = config.n_agents, config.n_steps, config.dt
    gains = config.gains.to_gains()
    params = config.detection.to_params()
    act_radius = config.detection.activation_radius
    literal = config.detection.collision_literal_trigger
    obstacles = config.obstacle_objs()
    buildings = config.building_objs()
    lo, hi = (np.array(b) for b in config.world_bounds)

    p0 = sample_initial_positions(config)
    local, iters = formation_targets(config, p0)
    barrier = config.barrier_obj(local)
    states = [UavState(i, p0[i].copy(), np.zeros(3)) for i in range(n)]

    m = len(obstacles)
    logd = TrajectoryLog(
        t=np.arange(steps) * dt, p=np.zeros((steps, n, 3)), v=np.zeros((steps, n, 3)),
        u_f=np.zeros((steps, n, 3)), u_c=np.zeros((steps, n, 3)), u_o=np.zeros((steps, n, 3)),
        n_detected=np.zeros((steps, n), dtype=np.int64), n_active=np.zeros((steps, n), dtype=np.int64),
        obstacle_centers=np.zeros((steps, m, 3)), targets=barrier_targets_at(barrier, 0.0),
        lloyd_iterations=iters)
    retess = config.lloyd.retessellate_every
    next_retess = retess

    for k in range(steps):
        t = k * dt
        if retess and t >= next_retess - 1e-9:
            rel = np.array([s.p for s in states]) - barrier.offset_at(t)
            local, _ = formation_targets(config, rel, config.lloyd_seed + k)
            barrier = barrier.with_targets(local)
            next_retess += retess
        pos = np.array([s.p for s in states])
        vel = np.array([s.v for s in states])
        if not np.all(np.isfinite(pos)) or np.any(pos < lo) or np.any(pos > hi):
            bad = int(np.flatnonzero(~np.all((pos >= lo) & (pos <= hi), axis=1))[0])
            raise DivergenceError(f"divergence: agent {bad} left the world box at t={t:.2f}s "
                                  f"(p={pos[bad].tolist()})")
        targets = barrier_targets_at(barrier, t)
        target_vel = barrier.velocity_at(t)
        views = [ObstacleView(obstacle_center_at(o, t), o.radius, o.id) for o in obstacles]
        logd.obstacle_centers[k] = [v.center for v in views] if m else np.zeros((0, 3))
        controls = []
        for i, s in enumerate(states):
            u_f = formation_accel(s.p, s.v, targets[i], target_vel, gains)
            u_c, active = collision_accel(i, pos, vel, gains, params, act_radius, literal)
            seen = views + [building_proxy(s.p, b, m + j) for j, b in enumerate(buildings)]
            u_o, detected = obstacle_accel(s.p, s.v, s.last_heading, seen, config.mode, gains, params)
            controls.append(total_accel(u_f, u_c, u_o, detected, active))
        logd.p[k], logd.v[k] = pos, vel
        for i, c in enumerate(controls):
            logd.u_f[k, i], logd.u_c[k, i], logd.u_o[k, i] = c.u_f, c.u_c, c.u_o
            logd.n_detected[k, i] = int(c.detected.sum())
            logd.n_active[k, i] = int(c.active.sum())
        if k < steps - 1:
            states = [integrate_step(s, c.u_total, dt) for s, c in zip(states, controls)]
    return logd


@dataclass
class Metrics:
    min_pairwise_distance: float
    min_obstacle_clearance: float
    obstacle_penetrations: int
    safety_band_entries: int
    final_rms_formation_error: float
    max_out_of_plane: float
    corridor_max_out_of_plane: float
    flock_x_progress: float
    min_building_clearance: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def pairwise_distances(p: np.ndarray) -> np.ndarray:
    """(steps, n, n) distance tensor."""
    return np.linalg.norm(p[:, :, None, :] - p[:, None, :, :], axis=3)


def corridor_mask(log_: TrajectoryLog, config: SimConfig) -> np.ndarray:
    """Steps where the flock mean x lies within the buildings' x-span."""
    if not config.buildings or len(log_.t) == 0:
        return np.zeros(len(log_.t), dtype=bool)
    x0 = min(b.min[0] for b in config.buildings)
    x1 = max(b.max[0] for b in config.buildings)
    mx = log_.p[:, :, 0].mean(axis=1)
    return (mx >= x0) & (mx <= x1)


def compute_metrics(log_: TrajectoryLog, config: SimConfig) -> Metrics:
    p = log_.p
    n = p.shape[1] if p.ndim == 3 else 0
    inf = math.inf
    if n >= 2 and len(p):
        d = pairwise_distances(p)
        iu = np.triu_indices(n, 1)
        pair = d[:, iu[0], iu[1]]
        min_pair = float(pair.min())
        band = int((pair < config.detection.r_s).sum())
    else:
        min_pair, band = inf, 0

    obstacles = config.obstacle_objs()
    clearance, penetrations = inf, 0
    if obstacles and len(p):
        centers = np.stack([[obstacle_center_at(o, t) for o in obstacles] for t in log_.t])
        radii = np.array([o.radius for o in obstacles])
        gap = np.linalg.norm(p[:, :, None, :] - centers[:, None, :, :], axis=3) - radii
        penetrations = int((gap <= 0).sum())
        clearance = max(0.0, float(gap.min()))

    bclear = inf
    for b in config.building_objs():
        if len(p):
            q = np.clip(p, b.lo, b.hi)
            bclear = min(bclear, float(np.linalg.norm(p - q, axis=2).min()))

    rms, excursion, corridor_exc, progress = 0.0, 0.0, 0.0, 0.0
    if len(p) and n:
        if log_.targets is not None:
            barrier = config.barrier_obj(log_.targets[:, :2])
        else:
            barrier = config.barrier_obj(formation_targets(config, p[0])[0])
        final = barrier_targets_at(barrier, config.duration)
        rms = float(np.sqrt(((p[-1] - final) ** 2).sum(axis=1).mean()))
        dz = np.abs(p[:, :, 2] - config.barrier.altitude)
        settled = log_.t >= config.barrier.motion_start
        excursion = float(dz[settled].max()) if settled.any() else 0.0
        cm = corridor_mask(log_, config)
        corridor_exc = float(dz[cm].max()) if cm.any() else 0.0
        progress = float(p[-1, :, 0].mean() - p[0, :, 0].mean())
    return Metrics(min_pair, clearance, penetrations, band, rms, excursion, corridor_exc,
                   progress, bclear)
