"""Time stepping of the transmitter-to-receiver channel, plus ensemble and sweep drivers.

Each step runs, in order: the shared cloud trajectory (with the buoyant mass
of the previous step's counts), settling and sampling for every droplet
class, then reception at the receiver face (overlap, accumulation,
quantisation, threshold test, depletion of the received droplets).
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import cloud, receiver as rx
from .errors import EnsembleError, InvalidParameterError, NumericalFailure, ChannelError
from .infection import exposure_moments, infection_probability
from .params import SEXES, ReceiverGeometry, dump_config
from .trajectory import TrajectoryPoint, advance_position, initial_point, solve_s, theta_at

SWEEP_PARAMETERS = ("x_R", "gamma", "theta0", "sex")


def quartic_track(cfg, t, prev, Z):
    """Default cloud path: solve the displacement quartic at ``t`` with buoyant mass ``Z``."""
    tx = cfg.transmitter
    s = solve_s(t, Z, tx, cfg.environment)
    return advance_position(prev, s, theta_at(t, tx), cfg.controls.dt, tx.alpha_e, t=t)


@dataclass(frozen=True)
class StaticCloud:
    """A cloud parked at a fixed place with fixed size and speed.

    Used as a ``track`` to build constant-geometry scenarios.
    """

    x: float
    y: float
    z: float
    r: float
    v_c: float

    def __call__(self, cfg, t, prev, Z):
        s = self.r / cfg.transmitter.alpha_e
        return TrajectoryPoint(t=t, s=s, theta=0.0, r=self.r, x=self.x, y=self.y, z=self.z, v_c=self.v_c)


@dataclass
class TimeSeries:
    cfg: object
    seed: int
    points: list
    class_states: list
    receptions: list
    Z: np.ndarray
    rho_c: np.ndarray
    lam: np.ndarray       # (n_steps, K)
    counts: np.ndarray    # (n_steps, K), after depletion

    @property
    def t(self):
        return np.array([p.t for p in self.points])

    @property
    def steps(self):
        return list(zip(self.points, self.class_states, self.receptions))

    @property
    def N_R(self):
        return np.array([r.N_R for r in self.receptions], dtype=np.int64)

    @property
    def states(self):
        return np.array([r.state for r in self.receptions], dtype=np.int64)

    @property
    def first_infection_time(self):
        for rec in self.receptions:
            if rec.state:
                return rec.t
        return None

    @property
    def total_received(self):
        """Peak quantised exposure over the run."""
        return int(self.N_R.max())

    @property
    def final_state(self):
        """1 if the receiver was infected at any step."""
        return int(self.states.max())

    def moments_at(self, i):
        p, rec = self.points[i], self.receptions[i]
        tx, ctl = self.cfg.transmitter, self.cfg.controls
        f_rc = rx.reception_factor(p.v_c, rec.area, p.r, tx.eta, ctl.dt)
        f_r = rx.reception_factor(p.v_c, self.cfg.receiver.A_R, p.r, tx.eta, ctl.dt) if rec.branch != rx.NONE else 0.0
        return exposure_moments(self.lam[: i + 1], f_rc, f_r, rec.branch)

    def probability_series(self, gamma=None, form=None):
        """Per-step P(received count > gamma) from the mean-count history."""
        ctl = self.cfg.controls
        gamma = ctl.gamma if gamma is None else gamma
        form = ctl.probability_form if form is None else form
        return np.array([infection_probability(gamma, self.moments_at(i), form) for i in range(len(self.points))])

    def summary(self):
        ctl = self.cfg.controls
        return {
            "config": dump_config(self.cfg),
            "seed": self.seed,
            "first_infection_time": self.first_infection_time,
            "total_received": self.total_received,
            "final_state": self.final_state,
            "mode": {
                "stochastic": ctl.stochastic,
                "settling_law": ctl.settling_law,
                "probability_form": ctl.probability_form,
            },
        }


def run_simulation(cfg, seed=None, track=None):
    """Run one transmission event on the grid t = 0, dt, ..., t_s.

    ``seed`` defaults to the config's seed and only matters when
    ``cfg.controls.stochastic`` is set. ``track`` replaces the cloud path
    (see StaticCloud); the default solves the displacement quartic.
    """
    ctl, tx, env = cfg.controls, cfg.transmitter, cfg.environment
    seed = ctl.seed if seed is None else int(seed)
    track = quartic_track if track is None else track
    rng = np.random.default_rng(seed)
    K = len(cfg.classes)
    n = ctl.n_steps
    dt = ctl.dt
    diam = [c.diameter for c in cfg.classes]
    x_R = cfg.receiver.position[0]
    r_R = cfg.receiver.r_R

    lam_hist = np.zeros((n, K))
    cnt_hist = np.zeros((n, K))
    Z_hist = np.zeros(n)
    rho_hist = np.full(n, math.nan)

    lam = np.array([c.initial_count for c in cfg.classes], dtype=float)
    if ctl.stochastic:
        counts = np.array([cloud.sample_count(l, rng) for l in lam])
    else:
        counts = lam.copy()
    exposure = counts.copy()   # running sum of depleted counts, steps 0..i-1

    point = initial_point(tx)
    points = [point]
    states = [tuple(cloud.ClassState(k, lam[k], counts[k], 0.0, 0.0) for k in range(K))]
    receptions = [rx.ReceptionRecord(0.0, (0,) * K, (0.0,) * K, 0, rx.detect(0, ctl.gamma))]
    lam_hist[0], cnt_hist[0] = lam, counts
    Z_hist[0] = cloud.buoyant_mass(counts, cfg)

    derived_vs = None
    if ctl.settling_law == "derived":
        derived_vs = [cloud.settling_velocity(d, 0.0, env, "derived") for d in diam]

    for i in range(1, n):
        t = i * dt
        # step 1: trajectory with the buoyant mass of the current population
        try:
            point = track(cfg, t, point, Z_hist[i - 1])
        except NumericalFailure as exc:
            raise NumericalFailure(f"step {i} (t={t:.6g} s): {exc}", step=i, t=t) from exc

        # step 2: settling and sampling
        Re = [cloud.reynolds(d, point.v_c, env) for d in diam]
        if derived_vs is None:
            v_s = [cloud.settling_velocity(d, point.v_c, env, "paper") for d in diam]
        else:
            v_s = derived_vs
        for k in range(K):
            dlam = cloud.lambda_step(lam[k], v_s[k], point.s, tx.alpha_e, dt)
            lam[k] = max(lam[k] + dlam, 0.0)
        if ctl.stochastic:
            counts = np.array([cloud.sample_count(l, rng) for l in lam])
        else:
            counts = lam.copy()

        # step 3: reception
        received = np.zeros(K, dtype=np.int64)
        recon = np.zeros(K)
        area, branch, factor = 0.0, rx.NONE, 0.0
        r_cs = rx.cross_section_radius(point.r, point.x, x_R)
        if r_cs is not None and point.r > 0:
            d_rc = rx.center_distance(cfg.receiver, point.y, point.z)
            area, branch = rx.overlap(r_R, r_cs, d_rc)
            if branch != rx.NONE:
                factor = rx.reception_factor(point.v_c, area, point.r, tx.eta, dt)
                recon = factor * counts
                received = rx.accumulate_quantize((exposure + counts)[None, :], factor)
                counts = np.array([rx.deplete(c, q) for c, q in zip(counts, received)])
        exposure += counts
        N_R = int(received.sum())
        receptions.append(rx.ReceptionRecord(
            t, tuple(int(q) for q in received), tuple(float(v) for v in recon),
            N_R, rx.detect(N_R, ctl.gamma), branch, area, factor,
        ))
        points.append(point)
        states.append(tuple(cloud.ClassState(k, lam[k], counts[k], v_s[k], Re[k]) for k in range(K)))
        lam_hist[i], cnt_hist[i] = lam, counts
        Z_hist[i] = cloud.buoyant_mass(counts, cfg)
        rho_hist[i] = cloud.cloud_density(counts, point.s, cfg) if point.s > 0 else math.nan

    return TimeSeries(cfg, seed, points, states, receptions, Z_hist, rho_hist, lam_hist, cnt_hist)


# ------------------------------------------------------------------ output

def _g(v):
    return f"{v:.9g}"


def csv_header(K):
    cols = ["t", "s", "theta_rad", "x", "y", "z", "r", "v_c", "Z", "rho_c"]
    for k in range(1, K + 1):
        cols += [f"lambda_{k}", f"count_{k}", f"received_{k}"]
    return cols + ["N_R", "state"]


def write_csv(ts, fh):
    w = csv.writer(fh, lineterminator="\n")
    K = ts.lam.shape[1]
    w.writerow(csv_header(K))
    for i, (p, rec) in enumerate(zip(ts.points, ts.receptions)):
        row = [_g(p.t), _g(p.s), _g(p.theta), _g(p.x), _g(p.y), _g(p.z), _g(p.r), _g(p.v_c),
               _g(ts.Z[i]), _g(ts.rho_c[i])]
        for k in range(K):
            row += [_g(ts.lam[i, k]), _g(ts.counts[i, k]), str(rec.per_class_received[k])]
        w.writerow(row + [str(rec.N_R), str(rec.state)])


def to_csv(ts):
    buf = io.StringIO()
    write_csv(ts, buf)
    return buf.getvalue()


# ---------------------------------------------------------------- ensembles

@dataclass
class EnsembleStats:
    n_runs: int
    infection_frequency: float
    half_width: float            # 3-sigma binomial half-width
    state_frequency: np.ndarray  # per step
    received_mean: np.ndarray    # per step
    received_sd: np.ndarray      # per step
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {
            "n_runs": self.n_runs,
            "infection_frequency": self.infection_frequency,
            "half_width_3sigma": self.half_width,
            "state_frequency": self.state_frequency.tolist(),
            "received_mean": self.received_mean.tolist(),
            "received_sd": self.received_sd.tolist(),
            "failures": [{"seed": s, "error": m} for s, m in self.failures],
        }


def _ensemble_member(args):
    cfg, seed, track = args
    try:
        ts = run_simulation(cfg, seed, track)
    except ChannelError as exc:
        return seed, None, None, str(exc)
    return seed, ts.N_R, ts.states, None


def binomial_half_width(p, n, z=3.0):
    return z * math.sqrt(p * (1.0 - p) / n)


def run_ensemble(cfg, n, base_seed=0, track=None, workers=1):
    """``n`` independent runs seeded ``base_seed .. base_seed + n - 1``.

    Failed runs are excluded and listed; more than 1 % failures is an error.
    Results are merged in seed order whatever ``workers`` is.
    """
    if n < 1:
        raise InvalidParameterError(f"ensemble size must be >= 1, got {n!r}")
    jobs = [(cfg, base_seed + j, track) for j in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_ensemble_member, jobs, chunksize=max(1, n // (4 * workers))))
    else:
        results = [_ensemble_member(job) for job in jobs]
    results.sort(key=lambda r: r[0])
    failures = [(seed, err) for seed, _, _, err in results if err is not None]
    if len(failures) > 0.01 * n:
        raise EnsembleError(f"{len(failures)} of {n} runs failed; first: {failures[0][1]}")
    ok = [r for r in results if r[3] is None]
    N_R = np.array([r[1] for r in ok], dtype=float)
    states = np.array([r[2] for r in ok], dtype=float)
    infected = states.max(axis=1)
    p = float(infected.mean())
    return EnsembleStats(
        n_runs=len(ok),
        infection_frequency=p,
        half_width=binomial_half_width(p, len(ok)),
        state_frequency=states.mean(axis=0),
        received_mean=N_R.mean(axis=0),
        received_sd=N_R.std(axis=0, ddof=1) if len(ok) > 1 else np.zeros(N_R.shape[1]),
        failures=failures,
    )


# ------------------------------------------------------------------ sweeps

@dataclass
class SweepResult:
    axis: str
    grid: list
    outcomes: list
    metadata: dict

    def to_rows(self):
        return [dict(o) for o in self.outcomes]


def _apply(cfg, parameter, value):
    if parameter == "x_R":
        if not math.isfinite(value):
            raise InvalidParameterError(f"x_R must be finite, got {value!r}")
        return cfg.with_receiver_x(float(value))
    if parameter == "gamma":
        return cfg.with_controls(gamma=value)
    if parameter == "theta0":
        return cfg.with_transmitter(theta0=float(value))
    if parameter == "sex":
        if value not in SEXES:
            raise InvalidParameterError(f"sex must be one of {SEXES}, got {value!r}")
        return replace(cfg, receiver=ReceiverGeometry.for_sex(value, cfg.receiver.position))
    raise InvalidParameterError(f"parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}")


def sweep(cfg, parameter, grid):
    """One run per grid value with everything else fixed.

    ``theta0`` values are radians. A gamma sweep reuses a single run because
    the threshold does not feed back into the dynamics.
    """
    grid = list(grid)
    if not grid:
        raise InvalidParameterError("sweep grid is empty")
    configs = [_apply(cfg, parameter, v) for v in grid]   # validate everything first
    form = cfg.controls.probability_form
    outcomes = []
    shared = run_simulation(cfg) if parameter == "gamma" else None
    for value, c in zip(grid, configs):
        if shared is not None:
            N_R = shared.N_R
            states = (N_R > c.controls.gamma).astype(int)
            first = next((shared.points[i].t for i in range(len(states)) if states[i]), None)
            final, total, ts = int(states.max()), int(N_R.max()), shared
        else:
            ts = run_simulation(c)
            first, final, total = ts.first_infection_time, ts.final_state, ts.total_received
        prob = float(ts.probability_series(c.controls.gamma, form).max())
        outcomes.append({
            parameter: value,
            "final_state": final,
            "first_infection_time": first,
            "total_received": total,
            "probability": prob,
        })
    meta = {
        "config_hash": cfg.digest(),
        "seed_policy": f"config seed {cfg.controls.seed} for every grid point"
        if cfg.controls.stochastic else "mean propagation (no sampling)",
    }
    return SweepResult(parameter, grid, outcomes, meta)


def probability_curve(cfg, x_R_grid, times):
    """Infection probability against receiver distance for several exposure times.

    Uses mean propagation. ``probability`` is the largest per-step value up to
    the step nearest ``t`` (the chance of having been infected by then);
    ``probability_step`` is the value at that step alone.
    """
    x_R_grid, times = list(x_R_grid), list(times)
    if not x_R_grid or not times:
        raise InvalidParameterError("x_R grid and time list must be non-empty")
    base = cfg.with_controls(stochastic=False)
    configs = [_apply(base, "x_R", x) for x in x_R_grid]
    ctl = base.controls
    for t in times:
        if not 0 <= t <= ctl.t_s:
            raise InvalidParameterError(f"time {t!r} outside [0, {ctl.t_s}]")
    outcomes = []
    for x, c in zip(x_R_grid, configs):
        ts = run_simulation(c)
        p = ts.probability_series(ctl.gamma, ctl.probability_form)
        running = np.maximum.accumulate(p)
        for t in times:
            i = min(int(round(t / ctl.dt)), len(p) - 1)
            outcomes.append({
                "x_R": x,
                "t": t,
                "probability": float(running[i]),
                "probability_step": float(p[i]),
                "branch": ts.receptions[i].branch,
            })
    meta = {"config_hash": cfg.digest(), "seed_policy": "mean propagation (no sampling)",
            "gamma": ctl.gamma, "form": ctl.probability_form}
    return SweepResult("x_R", x_R_grid, outcomes, meta)


def write_rows_csv(rows, fh):
    if not rows:
        return
    w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (_g(v) if isinstance(v, float) else ("" if v is None else v)) for k, v in row.items()})


def dumps_json(obj):
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"
