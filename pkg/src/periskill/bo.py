"""Warm-started Bayesian optimization over single-period waypoints.

Each trial turns a waypoint candidate into a rhythmic primitive, rolls it
out for the demo's repetition count, executes it in the environment, and
scores the resulting keypoint video against the demo.  The first trials
replay the best play-data "imagined" candidates; later trials pick the
UCB argmax over a pool of random and locally perturbed candidates.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import gp, imagine, metrics, rdmp, sim

N_SEGMENTS = 160  # play segments drawn for stitching
SEGMENT_LENGTH = 10  # frames per segment
N_IMAGINED_ATTEMPTS = 5000
TOP_IMAGINED = 100


@dataclass(frozen=True)
class BoConfig:
    n_waypoints: int
    budget: int = 50
    n_warm_start: int = 10
    beta: float = 0.1
    pool_random: int = 1000
    pool_local: int = 1000
    perturb_scale: float = 0.02
    bounds_lo: np.ndarray = field(default_factory=lambda: sim.WORKSPACE_LO.copy())
    bounds_hi: np.ndarray = field(default_factory=lambda: sim.WORKSPACE_HI.copy())
    seed: int = 0
    n_basis: int = rdmp.DEFAULT_N_BASIS
    refit_every: int = 5
    use_imagined: bool = True  # False: random warm start, no local pool

    def __post_init__(self):
        if self.n_warm_start > self.budget:
            raise ValueError("n_warm_start cannot exceed the budget")
        if np.any(np.asarray(self.bounds_hi) <= np.asarray(self.bounds_lo)):
            raise ValueError("bounds must be non-degenerate")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    candidate: imagine.Candidate
    objective: float
    performance: float
    provenance: str

    def __post_init__(self):
        if not (np.isfinite(self.objective) and np.isfinite(self.performance)):
            raise ValueError("objective and performance must be finite")


def _seed_ids(seed):
    if isinstance(seed, (tuple, list)):
        return [int(s) for s in seed]
    return [int(seed)]


def _clip_candidate(waypoints, cfg):
    return imagine.Candidate(
        waypoints=np.clip(waypoints, cfg.bounds_lo, cfg.bounds_hi)
    )


def _random_candidates(cfg, rng, count):
    w = rng.uniform(
        cfg.bounds_lo, cfg.bounds_hi, size=(count, cfg.n_waypoints, 3)
    )
    return [imagine.Candidate(waypoints=w[i]) for i in range(count)]


def build_pool(initial_candidates, cfg, seed=0, incumbents=()):
    """Candidate pool: initial candidates verbatim, uniform random draws,
    and Gaussian perturbations of promising candidates (clamped).

    Perturbations are centered on the initial candidates plus any supplied
    incumbents (best trials so far), at the configured scale and at a
    quarter of it for local refinement.  With no initial candidates the
    pool degrades to random-only.
    """
    rng = np.random.default_rng(_seed_ids(seed) + [0xB001])
    pool = list(initial_candidates)
    pool.extend(_random_candidates(cfg, rng, cfg.pool_random))
    sources = list(initial_candidates) + list(incumbents)
    if sources and cfg.pool_local > 0:
        src = rng.integers(0, len(sources), size=cfg.pool_local)
        scales = np.where(
            rng.random(cfg.pool_local) < 0.5, cfg.perturb_scale, cfg.perturb_scale / 4
        )
        noise = rng.normal(0.0, 1.0, size=(cfg.pool_local, cfg.n_waypoints, 3))
        for k in range(cfg.pool_local):
            wp = sources[src[k]].waypoints + noise[k] * scales[k]
            pool.append(_clip_candidate(wp, cfg))
    return pool


def propose(model, pool, cfg):
    """Pool member maximizing the upper confidence bound (first max wins)."""
    if not pool:
        raise ValueError("empty candidate pool")
    flat = np.stack([c.flat for c in pool])
    values = gp.ucb(model, flat, gp.AcquisitionConfig(beta=cfg.beta))
    return pool[int(np.argmax(values))]


def _execute_candidate(env, candidate, period, n_rep, cfg):
    params = rdmp.from_waypoints(candidate.waypoints, period, n_basis=cfg.n_basis)
    dense = rdmp.waypoint_trajectory(candidate.waypoints, period)
    v0 = (dense.points[1] - dense.points[0]) / dense.dt
    init = rdmp.initial_state(params, x0=dense.points[0], v0=v0)
    plan = rdmp.rollout(params, n_periods=n_rep, init=init)
    return sim.execute_plan(env, plan)


def warm_start_candidates(demo_single_period, play, cfg, period_frames):
    """Imagined-trajectory candidates from play data, best first."""
    rng_seed = cfg.seed
    segments = imagine.sample_segments(
        play, count=N_SEGMENTS, segment_length=SEGMENT_LENGTH, seed=rng_seed
    )
    d_seg = imagine.segment_displacement_scale(segments) / 6.0
    m = max(1, int(round(period_frames / SEGMENT_LENGTH)))
    imagined = imagine.stitch_imagined(
        segments, m=m, d_seg=d_seg, n_attempts=N_IMAGINED_ATTEMPTS, seed=rng_seed
    )
    # rejection sampling revisits segment sequences; keep one copy of each
    seen = set()
    unique = []
    for traj in imagined:
        if traj.segment_ids not in seen:
            seen.add(traj.segment_ids)
            unique.append(traj)
    top_n = min(TOP_IMAGINED, len(unique))
    candidates = imagine.select_initial_candidates(
        unique, demo_single_period, top_n=top_n, n_waypoints=cfg.n_waypoints
    )
    return [_clip_candidate(c.waypoints, cfg) for c in candidates], d_seg


def run(env, demo, play, cfg, exemplar):
    """Full optimization loop; returns (best record, all records).

    The demo must contain at least two repetitions.  The exemplar is used
    only to log the cross-method performance metric; no decision in the
    loop reads it.
    """
    estimate = metrics.estimate_periods(demo)
    n_rep = estimate.n_rep
    period = estimate.period_frames * demo.dt
    single = metrics.split_single_period(demo, estimate)
    dist_cfg = metrics.DistanceConfig.for_reps(n_rep, demo.n_keypoints)

    if cfg.use_imagined:
        initial_candidates, d_seg = warm_start_candidates(
            single, play, cfg, estimate.period_frames
        )
        cfg = replace(cfg, perturb_scale=d_seg)
        warm_provenance = "warm-start"
    else:
        initial_candidates = []
        warm_provenance = "random"

    rng = np.random.default_rng([cfg.seed, 0x4A4])
    warm = list(initial_candidates[: cfg.n_warm_start])
    if len(warm) < cfg.n_warm_start:
        warm.extend(_random_candidates(cfg, rng, cfg.n_warm_start - len(warm)))

    records = []
    train_x, train_y = [], []
    model = None
    hyper = None

    def run_trial(index, candidate, provenance):
        traj, video = _execute_candidate(env, candidate, period, n_rep, cfg)
        objective = -metrics.keypoint_distance(demo, video, dist_cfg)
        perf = metrics.performance(exemplar, traj)
        records.append(
            TrialRecord(
                trial=index,
                candidate=candidate,
                objective=objective,
                performance=perf,
                provenance=provenance,
            )
        )
        train_x.append(candidate.flat)
        train_y.append(objective)

    for t, candidate in enumerate(warm, start=1):
        run_trial(t, candidate, warm_provenance)

    for t in range(cfg.n_warm_start + 1, cfg.budget + 1):
        steps_since_warm = t - cfg.n_warm_start - 1
        if model is None or steps_since_warm % cfg.refit_every == 0:
            model = gp.fit(np.stack(train_x), np.array(train_y))
            hyper = (model.signal_variance, model.length_scales, model.noise_variance)
        else:
            model = gp.fit(
                np.stack(train_x),
                np.array(train_y),
                optimize_hyperparams=False,
                signal_variance=hyper[0],
                length_scales=hyper[1],
                noise_variance=hyper[2],
            )
        top = sorted(records, key=lambda r: -r.objective)[:5]
        pool = build_pool(
            initial_candidates,
            cfg,
            seed=(cfg.seed, t),
            incumbents=[r.candidate for r in top],
        )
        candidate = propose(model, pool, cfg)
        run_trial(t, candidate, "acquisition-argmax")

    best = max(records, key=lambda r: r.objective)
    return best, records
