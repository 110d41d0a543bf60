"""Comparison methods sharing the simulator and metrics stack.

Direct imitation regresses effector positions from keypoints over the play
data, maps the demo frames to a predicted path, and executes one fitted
primitive (no per-trial updates).  MBIL learns a linear keypoint dynamics
model from play and greedily picks, at every frame, the sampled action
whose predicted next keypoints best match the time-aligned demo frame,
refitting the model after each episode.  Neither method ever reads the
evaluation exemplar; it is only used to score their executions.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import metrics, rdmp, sim
from .bo import TrialRecord
from .imagine import Candidate, waypoint_indices

KNN_NEIGHBORS = 5
RIDGE_LAMBDA = 1e-3
ACTION_CAP = sim.EE_SPEED_CAP * sim.FRAME_DT  # per-axis displacement bound


@dataclass(frozen=True)
class KeypointRegressor:
    """Distance-weighted k-nearest-neighbor map from keypoints to positions."""

    train_inputs: np.ndarray  # (T, 2*N_k)
    train_outputs: np.ndarray  # (T, 3)
    k: int = KNN_NEIGHBORS

    @classmethod
    def fit(cls, keypoint_video, positions, k=KNN_NEIGHBORS):
        flat = keypoint_video.frames.reshape(len(keypoint_video), -1)
        if len(flat) == 0:
            raise ValueError("empty training set")
        return cls(train_inputs=flat, train_outputs=np.asarray(positions, float), k=k)

    def predict(self, frames):
        """Predict positions for keypoint frames of shape (Q, N_k, 2)."""
        q = np.asarray(frames, float).reshape(len(frames), -1)
        d = cdist(q, self.train_inputs)
        k = min(self.k, d.shape[1])
        idx = np.argpartition(d, k - 1, axis=1)[:, :k]
        out = np.empty((len(q), self.train_outputs.shape[1]))
        for i in range(len(q)):
            di = d[i, idx[i]]
            exact = di < 1e-12
            if exact.any():
                out[i] = self.train_outputs[idx[i][np.argmin(di)]]
            else:
                w = 1.0 / di
                w /= w.sum()
                out[i] = w @ self.train_outputs[idx[i]]
        return out


@dataclass(frozen=True)
class KeypointDynamicsModel:
    """Ridge-regularized linear map (keypoints, action) -> next keypoints."""

    coef: np.ndarray  # (2*N_k + 4, 2*N_k), last row is the bias

    @classmethod
    def fit(cls, inputs, targets, lam=RIDGE_LAMBDA):
        x = np.concatenate([inputs, np.ones((len(inputs), 1))], axis=1)
        gram = x.T @ x + lam * np.eye(x.shape[1])
        coef = np.linalg.solve(gram, x.T @ targets)
        if not np.all(np.isfinite(coef)):
            raise ValueError("dynamics fit produced non-finite coefficients")
        return cls(coef=coef)

    def predict(self, keypoints_flat, actions):
        """Batch prediction: (Q, 2*N_k) keypoints tiled against (Q, 3) actions."""
        x = np.concatenate(
            [keypoints_flat, actions, np.ones((len(actions), 1))], axis=1
        )
        return x @ self.coef


def play_transitions(play):
    """(keypoints_t, action_t, keypoints_t+1) triples from the robot stream."""
    kp = play.robot_keypoints.frames.reshape(len(play), -1)
    actions = np.diff(play.robot_positions, axis=0)
    inputs = np.concatenate([kp[:-1], actions], axis=1)
    targets = kp[1:]
    return inputs, targets


def _demo_timing(demo):
    est = metrics.estimate_periods(demo)
    return est, est.period_frames * demo.dt


def _as_records(entries, budget=None):
    records = []
    for i, (candidate, objective, performance, provenance) in enumerate(entries, 1):
        records.append(
            TrialRecord(
                trial=i,
                candidate=candidate,
                objective=objective,
                performance=performance,
                provenance=provenance,
            )
        )
    if budget is not None and records:
        while len(records) < budget:
            last = records[-1]
            records.append(
                TrialRecord(
                    trial=len(records) + 1,
                    candidate=last.candidate,
                    objective=last.objective,
                    performance=last.performance,
                    provenance=last.provenance,
                )
            )
    return records


def _trajectory_candidate(points, n_waypoints):
    idx = waypoint_indices(len(points), max(3, n_waypoints))
    return Candidate(waypoints=np.asarray(points, float)[idx].copy())


def direct_imitation_records(play, demo, env, exemplar, budget=1, n_waypoints=7):
    """One fixed execution, replicated across the trial budget for plotting."""
    regressor = KeypointRegressor.fit(play.robot_keypoints, play.robot_positions)
    predicted = regressor.predict(demo.frames)
    est, period = _demo_timing(demo)
    plan_demo = rdmp.Trajectory(dt=demo.dt, points=predicted)
    params = rdmp.fit_from_demo(plan_demo, period=period)
    v0 = (predicted[1] - predicted[0]) / demo.dt
    init = rdmp.initial_state(params, x0=predicted[0], v0=v0)
    plan = rdmp.rollout(params, n_periods=est.n_rep, init=init)
    traj, video = sim.execute_plan(env, plan)
    cfg = metrics.DistanceConfig.for_reps(est.n_rep, demo.n_keypoints)
    objective = -metrics.keypoint_distance(demo, video, cfg)
    performance = metrics.performance(exemplar, traj)
    entry = (_trajectory_candidate(traj.points, n_waypoints), objective, performance,
             "direct-imitation")
    return traj, _as_records([entry], budget=budget)


def direct_imitation(play, demo, env, exemplar):
    """Fit once on play, map the demo to positions, execute a single primitive."""
    traj, records = direct_imitation_records(play, demo, env, exemplar)
    return traj, records[0].performance


def _choose_action(model, kp_flat, demo_frame, rng, n_samples, n_keypoints):
    """Sampled single-step MPC: argmin predicted keypoint distance."""
    actions = rng.uniform(-ACTION_CAP, ACTION_CAP, size=(n_samples, 3))
    kp_tiled = np.tile(kp_flat, (n_samples, 1))
    predicted = model.predict(kp_tiled, actions)
    target = demo_frame.ravel()
    scores = np.abs(predicted - target).sum(axis=1) / n_keypoints
    best = int(np.argmin(scores))
    return actions[best], actions, scores


def mbil_records(
    play,
    demo,
    env,
    exemplar,
    episodes=50,
    n_action_samples=5000,
    seed=0,
    n_waypoints=7,
):
    """Per-episode MPC imitation; the dynamics model is refit every episode."""
    records, _ = _mbil_run(
        play, demo, env, exemplar,
        episodes=episodes, n_action_samples=n_action_samples,
        seed=seed, n_waypoints=n_waypoints,
    )
    return records


def _mbil_run(
    play,
    demo,
    env,
    exemplar,
    episodes,
    n_action_samples,
    seed,
    n_waypoints,
):
    est, _ = _demo_timing(demo)
    cfg = metrics.DistanceConfig.for_reps(est.n_rep, demo.n_keypoints)
    base_inputs, base_targets = play_transitions(play)
    new_inputs, new_targets = [], []
    entries = []
    trajectories = []
    n_frames = len(demo)
    for episode in range(episodes):
        if new_inputs:
            inputs = np.concatenate([base_inputs, np.stack(new_inputs)])
            targets = np.concatenate([base_targets, np.stack(new_targets)])
        else:
            inputs, targets = base_inputs, base_targets
        model = KeypointDynamicsModel.fit(inputs, targets)
        rng = np.random.default_rng([seed, episode, 0x3B17])
        state = env
        frames = np.empty((n_frames, demo.n_keypoints, 2))
        positions = np.empty((n_frames, 3))
        frames[0] = sim.observe_keypoints(state)
        positions[0] = state.ee
        for t in range(1, n_frames):
            kp_flat = frames[t - 1].ravel()
            action, _, _ = _choose_action(
                model, kp_flat, demo.frames[t], rng, n_action_samples, demo.n_keypoints
            )
            prev_ee = state.ee
            state = sim.env_step(state, prev_ee + action, sim.FRAME_DT)
            frames[t] = sim.observe_keypoints(state)
            positions[t] = state.ee
            new_inputs.append(
                np.concatenate([kp_flat, state.ee - prev_ee])
            )
            new_targets.append(frames[t].ravel())
        video = sim.KeypointVideo(frames=frames, dt=sim.FRAME_DT)
        traj = rdmp.Trajectory(dt=sim.FRAME_DT, points=positions)
        objective = -metrics.keypoint_distance(demo, video, cfg)
        performance = metrics.performance(exemplar, traj)
        entries.append(
            (_trajectory_candidate(positions, n_waypoints), objective, performance,
             "mbil")
        )
        trajectories.append(traj)
    return _as_records(entries), trajectories


def mbil(play, demo, env, exemplar, n_action_samples=5000, episodes=50, seed=0):
    """Run MBIL episodes; return the best execution by its own objective."""
    records, trajectories = _mbil_run(
        play, demo, env, exemplar,
        episodes=episodes, n_action_samples=n_action_samples,
        seed=seed, n_waypoints=7,
    )
    best_idx = int(np.argmax([r.objective for r in records]))
    return trajectories[best_idx], records[best_idx].performance


def evaluate_baseline(method, play, demo, env, exemplar, budget=50, seed=0,
                      n_waypoints=7):
    """Uniform entry point used by the experiment harness."""
    if method == "direct-imitation":
        _, records = direct_imitation_records(
            play, demo, env, exemplar, budget=budget, n_waypoints=n_waypoints
        )
        return records
    if method == "mbil":
        return mbil_records(
            play, demo, env, exemplar,
            episodes=budget, seed=seed, n_waypoints=n_waypoints,
        )
    raise ValueError(f"unknown baseline {method!r}")
