"""Experiment orchestration: methods x tasks x seeds, logs, and aggregation.

Every run writes per-seed trial CSVs, a config snapshot that reproduces the
run, an aggregate CSV of best-so-far performance statistics across seeds,
and wall-clock timings (timings live in their own file and are the only
output excluded from the byte-identical reproducibility contract).
"""

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import baselines, bo, io, sim

METHODS = ("viptl", "random-bo", "direct-imitation", "mbil")
DEFAULT_WAYPOINTS = {"wiping": 7, "winding": 7, "stirring": 5}


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "wiping"
    method: str = "viptl"
    seeds: tuple = (0, 1, 2)
    budget: int = 50
    n_warm_start: int = 10
    n_waypoints: int = None
    beta: float = 0.1
    play_duration: float = 600.0
    demo_reps: int = 3
    output_dir: str = "runs"

    def __post_init__(self):
        if self.task not in sim.TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.n_waypoints is None:
            object.__setattr__(self, "n_waypoints", DEFAULT_WAYPOINTS[self.task])

    def run_name(self):
        return f"{self.task}_{self.method}"


def config_to_text(cfg):
    lines = [
        f"task={cfg.task}",
        f"method={cfg.method}",
        "seeds=" + ",".join(str(s) for s in cfg.seeds),
        f"budget={cfg.budget}",
        f"n_warm_start={cfg.n_warm_start}",
        f"n_waypoints={cfg.n_waypoints}",
        f"beta={cfg.beta!r}",
        f"play_duration={cfg.play_duration!r}",
        f"demo_reps={cfg.demo_reps}",
        f"output_dir={cfg.output_dir}",
    ]
    return "\n".join(lines) + "\n"


def config_from_text(text):
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    kwargs = {}
    if "task" in fields:
        kwargs["task"] = fields["task"]
    if "method" in fields:
        kwargs["method"] = fields["method"]
    if "seeds" in fields:
        kwargs["seeds"] = tuple(int(s) for s in fields["seeds"].split(",") if s)
    for key in ("budget", "n_warm_start", "n_waypoints", "demo_reps"):
        if key in fields:
            kwargs[key] = int(fields[key])
    for key in ("beta", "play_duration"):
        if key in fields:
            kwargs[key] = float(fields[key])
    if "output_dir" in fields:
        kwargs["output_dir"] = fields["output_dir"]
    return ExperimentConfig(**kwargs)


def load_config(path):
    with open(path) as fh:
        return config_from_text(fh.read())


def run_method_for_seed(cfg, seed):
    """One (method, seed) run; returns the TrialRecord list."""
    play = sim.collect_play(cfg.task, cfg.play_duration, seed=seed)
    demo, exemplar = sim.scripted_demo(cfg.task, cfg.demo_reps, seed=seed)
    env = sim.make_env(cfg.task, seed=seed)
    if cfg.method in ("viptl", "random-bo"):
        bo_cfg = bo.BoConfig(
            n_waypoints=cfg.n_waypoints,
            budget=cfg.budget,
            n_warm_start=min(cfg.n_warm_start, cfg.budget),
            beta=cfg.beta,
            seed=seed,
            use_imagined=(cfg.method == "viptl"),
        )
        _, records = bo.run(env, demo, play, bo_cfg, exemplar)
        return records
    return baselines.evaluate_baseline(
        cfg.method,
        play,
        demo,
        env,
        exemplar,
        budget=cfg.budget,
        seed=seed,
        n_waypoints=cfg.n_waypoints,
    )


def best_so_far_performance(records):
    """Performance of the best-objective trial so far, per trial index."""
    out = []
    best = None
    for r in records:
        if best is None or r.objective > best.objective:
            best = r
        out.append(best.performance)
    return out


def run_experiment(cfg):
    """Run all seeds, write per-seed logs, the aggregate, and the snapshot.

    Returns the run directory path.
    """
    run_dir = os.path.join(cfg.output_dir, cfg.run_name())
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, "config.txt"), "w") as fh:
        fh.write(config_to_text(cfg))

    curves = []
    timings = []
    for seed in cfg.seeds:
        t0 = time.perf_counter()
        records = run_method_for_seed(cfg, seed)
        timings.append((seed, time.perf_counter() - t0))
        io.write_trial_log(
            os.path.join(run_dir, f"seed{seed}_trials.csv"), records, cfg.n_waypoints
        )
        curves.append(best_so_far_performance(records))

    n_trials = min(len(c) for c in curves)
    table = np.array([c[:n_trials] for c in curves])
    with open(os.path.join(run_dir, "aggregate.csv"), "w") as fh:
        fh.write("trial,mean_best_performance,std_best_performance\n")
        for t in range(n_trials):
            mean = repr(float(table[:, t].mean()))
            std = repr(float(table[:, t].std()))
            fh.write(f"{t + 1},{mean},{std}\n")

    with open(os.path.join(run_dir, "timings.txt"), "w") as fh:
        for seed, elapsed in timings:
            fh.write(f"seed{seed}={elapsed:.3f}s\n")
    return run_dir


def read_aggregate(run_dir):
    data = np.loadtxt(
        os.path.join(run_dir, "aggregate.csv"), delimiter=",", skiprows=1, ndmin=2
    )
    return data  # columns: trial, mean, std
