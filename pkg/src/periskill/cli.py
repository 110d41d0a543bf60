"""Command-line entry points.

Subcommands: run (an experiment), demo (record a scripted demo), play
(record play data), plot-data (tidy CSV of run logs), validate (fast
invariant battery).  Output root defaults to $PERISKILL_OUTPUT or ./runs.
"""

import argparse
import os
import sys

import numpy as np

from . import bo, gp, harness, imagine, io, metrics, rdmp, sim


def _output_root(override=None):
    return override or os.environ.get("PERISKILL_OUTPUT", "runs")


def _cmd_run(args):
    if args.config:
        cfg = harness.load_config(args.config)
    else:
        cfg = harness.ExperimentConfig()
    overrides = {}
    if args.task:
        overrides["task"] = args.task
    if args.method:
        overrides["method"] = args.method
    if args.seeds:
        overrides["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    if args.budget:
        overrides["budget"] = args.budget
    if args.output is not None or not args.config:
        overrides["output_dir"] = _output_root(args.output)
    if overrides:
        base = {
            "task": cfg.task,
            "method": cfg.method,
            "seeds": cfg.seeds,
            "budget": cfg.budget,
            "n_warm_start": cfg.n_warm_start,
            "beta": cfg.beta,
            "play_duration": cfg.play_duration,
            "demo_reps": cfg.demo_reps,
            "output_dir": cfg.output_dir,
        }
        base.update(overrides)
        cfg = harness.ExperimentConfig(**base)
    run_dir = harness.run_experiment(cfg)
    agg = harness.read_aggregate(run_dir)
    print(f"wrote {run_dir}")
    print(f"final mean best-so-far performance: {agg[-1, 1]:.3f} +/- {agg[-1, 2]:.3f}")
    return 0


def _cmd_demo(args):
    video, exemplar = sim.scripted_demo(args.task, args.reps, seed=args.seed)
    root = _output_root(args.output)
    os.makedirs(root, exist_ok=True)
    base = os.path.join(root, f"{args.task}_demo_seed{args.seed}")
    io.write_keypoint_video(base + "_keypoints.csv", video)
    io.write_trajectory(base + "_exemplar.csv", exemplar)
    print(f"wrote {base}_keypoints.csv and {base}_exemplar.csv")
    return 0


def _cmd_play(args):
    play = sim.collect_play(args.task, args.duration, seed=args.seed)
    root = _output_root(args.output)
    os.makedirs(root, exist_ok=True)
    prefix = os.path.join(root, f"{args.task}_play_seed{args.seed}")
    io.write_play_dataset(prefix, play)
    print(f"wrote {prefix}_positions.csv and keypoint streams")
    return 0


def _cmd_plot_data(args):
    rows = ["task,method,seed,trial,objective,performance,best_performance"]
    for entry in sorted(os.listdir(args.run_root)):
        run_dir = os.path.join(args.run_root, entry)
        cfg_path = os.path.join(run_dir, "config.txt")
        if not os.path.isfile(cfg_path):
            continue
        cfg = harness.load_config(cfg_path)
        for name in sorted(os.listdir(run_dir)):
            if not (name.startswith("seed") and name.endswith("_trials.csv")):
                continue
            seed = name[len("seed") : -len("_trials.csv")]
            records = io.read_trial_log(os.path.join(run_dir, name))
            best = harness.best_so_far_performance(records)
            for r, b in zip(records, best):
                rows.append(
                    f"{cfg.task},{cfg.method},{seed},{r.trial},"
                    f"{r.objective!r},{r.performance!r},{b!r}"
                )
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _check(name, condition):
    print(f"{'ok  ' if condition else 'FAIL'} {name}")
    return bool(condition)


def _cmd_validate(_args):
    """Fast invariant battery over all modules; exit 0 when green."""
    ok = True
    rng = np.random.default_rng(0)

    p = rdmp.fit_from_demo(
        rdmp.Trajectory(dt=0.01, points=0.1 * np.sin(2 * np.pi * np.arange(600) * 0.01 / 2.0)[:, None]),
        period=2.0,
    )
    phis = rng.uniform(-10, 10, 20)
    ok &= _check(
        "forcing is 2*pi periodic",
        all(
            np.allclose(rdmp.forcing(ph, p), rdmp.forcing(ph + 2 * np.pi, p), atol=1e-9)
            for ph in phis
        ),
    )
    out = rdmp.rollout(p, n_periods=5, init=rdmp.initial_state(p, x0=[0.0]))
    n_per = int(round(p.period / out.dt))
    amp = np.ptp(out.points[:, 0])
    cyc = np.abs(out.points[2 * n_per : 4 * n_per] - out.points[3 * n_per : 5 * n_per])
    ok &= _check("limit cycle periodic to 1e-3*amplitude", cyc.max() < 1e-3 * amp)

    x = rng.uniform(-1, 1, (8, 3))
    y = rng.normal(size=8)
    model = gp.fit(x, y, optimize_hyperparams=False, noise_variance=1e-4)
    q = rng.uniform(-1, 1, 3)
    mean, std = gp.posterior(model, q)
    xs = (model.train_x - model.x_mean) / model.x_std
    qs = (q - model.x_mean) / model.x_std
    k_mat = gp._kernel_matrix(xs, xs, model.signal_variance, model.length_scales)
    k_inv = np.linalg.inv(k_mat + model.noise_variance * np.eye(8))
    ks = gp._kernel_matrix(xs, qs[None], model.signal_variance, model.length_scales)[:, 0]
    omean = model.prior_mean + ks @ k_inv @ (y - model.prior_mean)
    ovar = model.signal_variance - ks @ k_inv @ ks
    ok &= _check(
        "gp factorization matches dense oracle",
        abs(mean - omean) < 1e-8 and abs(std - np.sqrt(max(ovar, 0))) < 1e-8,
    )
    ok &= _check(
        "ucb equals mean + beta*std",
        gp.ucb(model, q, gp.AcquisitionConfig(beta=0.1)) == mean + 0.1 * std,
    )

    for task in sim.TASKS:
        env = sim.make_env(task, seed=1)
        inside = True
        for _ in range(40):
            env = sim.env_step(env, rng.uniform(sim.WORKSPACE_LO, sim.WORKSPACE_HI), sim.FRAME_DT)
            kp = sim.observe_keypoints(env)
            inside &= kp.min() >= 0.0 and kp.max() <= 1.0
            if task == "winding":
                gaps = np.linalg.norm(np.diff(env.particles, axis=0), axis=1)
                inside &= bool(np.all(np.abs(gaps - sim.ROPE_REST) <= 0.1 * sim.ROPE_REST))
        ok &= _check(f"{task}: keypoints in range, constraints hold", inside)

    demo, _ = sim.scripted_demo("wiping", 3, seed=2)
    est = metrics.estimate_periods(demo)
    ok &= _check("period estimation recovers demo repetitions", est.n_rep == 3)

    play = sim.collect_play("wiping", 40.0, seed=3)
    segs = imagine.sample_segments(play, count=20, segment_length=10, seed=3)
    d_seg = imagine.segment_displacement_scale(segs) / 6.0
    stitched = imagine.stitch_imagined(segs, m=2, d_seg=d_seg, n_attempts=300, seed=3)
    imagine.validate_junctions(stitched, segs, d_seg)
    ok &= _check("imagined junction constraint holds on every stitch", True)

    a = sim.scripted_demo("stirring", 2, seed=4)[0]
    b = sim.scripted_demo("stirring", 2, seed=4)[0]
    ok &= _check("demo generation is bit-reproducible", np.array_equal(a.frames, b.frames))

    print("validate:", "OK" if ok else "FAILED")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="periskill",
        description="Periodic skill learning experiments on simulated tabletop tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment (methods x seeds)")
    p_run.add_argument("config", nargs="?", help="config file (key=value lines)")
    p_run.add_argument("--task", choices=sim.TASKS)
    p_run.add_argument("--method", choices=harness.METHODS)
    p_run.add_argument("--seeds", help="comma-separated seed list")
    p_run.add_argument("--budget", type=int)
    p_run.add_argument("--output", help="output root (default $PERISKILL_OUTPUT or ./runs)")
    p_run.set_defaults(func=_cmd_run)

    p_demo = sub.add_parser("demo", help="record a scripted demo to disk")
    p_demo.add_argument("--task", required=True, choices=sim.TASKS)
    p_demo.add_argument("--reps", type=int, default=3)
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--output")
    p_demo.set_defaults(func=_cmd_demo)

    p_play = sub.add_parser("play", help="record play data to disk")
    p_play.add_argument("--task", required=True, choices=sim.TASKS)
    p_play.add_argument("--duration", type=float, default=600.0)
    p_play.add_argument("--seed", type=int, default=0)
    p_play.add_argument("--output")
    p_play.set_defaults(func=_cmd_play)

    p_plot = sub.add_parser("plot-data", help="emit tidy CSV from run logs")
    p_plot.add_argument("run_root")
    p_plot.add_argument("--out")
    p_plot.set_defaults(func=_cmd_plot_data)

    p_val = sub.add_parser("validate", help="run the fast invariant battery")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
