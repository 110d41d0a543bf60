"""Warm-start candidates stitched from robot play data.

Short play segments are chained into "imagined" trajectories whose junction
gaps stay below a threshold, scored against the single-period demo using the
keypoint distance (no robot execution needed), and the best ones are
sub-sampled into waypoint candidates that seed the optimizer.
"""

from dataclasses import dataclass

import numpy as np

from . import metrics
from .sim import KeypointVideo


@dataclass(frozen=True)
class PlayDataset:
    """Unpaired play streams: robot positions+keypoints, human keypoints."""

    robot_positions: np.ndarray  # (T, 3)
    robot_keypoints: KeypointVideo
    human_keypoints: KeypointVideo
    dt: float

    def __post_init__(self):
        if len(self.robot_positions) != len(self.robot_keypoints):
            raise ValueError("robot positions and keypoints must be frame-aligned")
        if self.robot_keypoints.n_keypoints != self.human_keypoints.n_keypoints:
            raise ValueError("robot and human streams must share the keypoint count")

    def __len__(self):
        return len(self.robot_positions)


@dataclass(frozen=True)
class Segment:
    """A contiguous slice of the robot play stream."""

    start_index: int
    positions: np.ndarray  # (T_s, 3)
    keypoints: np.ndarray  # (T_s, N_k, 2)

    def __post_init__(self):
        if len(self.positions) < 2:
            raise ValueError("segments need at least 2 frames")

    @property
    def length(self):
        return len(self.positions)


@dataclass(frozen=True)
class ImaginedTrajectory:
    segment_ids: tuple
    positions: np.ndarray  # stitched (m * T_s, 3)
    keypoints: np.ndarray  # stitched (m * T_s, N_k, 2)
    score: float = float("nan")


@dataclass(frozen=True)
class Candidate:
    """Optimizer search point: L waypoints in workspace coordinates."""

    waypoints: np.ndarray  # (L, 3)

    def __post_init__(self):
        if self.waypoints.ndim != 2 or len(self.waypoints) < 3:
            raise ValueError("candidates need at least 3 waypoints")

    @property
    def flat(self):
        return self.waypoints.ravel()


def sample_segments(play, count, segment_length, seed=0):
    """Draw ``count`` segments with uniform random starts (overlap allowed)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if len(play) < segment_length:
        raise ValueError("play data shorter than the segment length")
    rng = np.random.default_rng([seed, 0x5E6])
    starts = rng.integers(0, len(play) - segment_length + 1, size=count)
    return [
        Segment(
            start_index=int(s),
            positions=play.robot_positions[s : s + segment_length],
            keypoints=play.robot_keypoints.frames[s : s + segment_length],
        )
        for s in starts
    ]


def segment_displacement_scale(segments):
    """Largest end-to-start displacement across segments (sets d_seg)."""
    return max(
        float(np.linalg.norm(s.positions[-1] - s.positions[0])) for s in segments
    )


def _junction_gap(a, b):
    return float(np.linalg.norm(a.positions[-1] - b.positions[0]))


def _blend_join(prev_last, block, n_blend=2):
    """Shift the first n_blend frames of a block toward continuity with the
    previous block, fading the shift out linearly."""
    block = block.copy()
    delta = prev_last - block[0]
    for j in range(min(n_blend, len(block))):
        block[j] = block[j] + delta * (1.0 - j / n_blend)
    return block


def stitch_imagined(segments, m, d_seg, n_attempts=5000, seed=0):
    """Chain m segments per attempt, junction gaps held below d_seg.

    Each attempt draws its first segment uniformly, then every next segment
    uniformly among those whose start lies within d_seg of the current end
    (the rejection step); attempts with no feasible continuation are
    dropped.  Junction gaps are bridged by a 2-frame linear blend in both
    positions and keypoints.  Raises if nothing is accepted.
    """
    if d_seg <= 0:
        raise ValueError("d_seg must be positive")
    if not segments:
        raise ValueError("no segments to stitch")
    n_seg = len(segments)
    ends = np.stack([s.positions[-1] for s in segments])
    starts = np.stack([s.positions[0] for s in segments])
    # feasible[i] = segment ids that may follow segment i
    gap = np.linalg.norm(ends[:, None, :] - starts[None, :, :], axis=2)
    feasible = [np.flatnonzero(gap[i] <= d_seg) for i in range(n_seg)]

    accepted = []
    for attempt in range(n_attempts):
        rng = np.random.default_rng([seed, attempt, 0x111A])
        ids = [int(rng.integers(n_seg))]
        ok = True
        for _ in range(m - 1):
            options = feasible[ids[-1]]
            if len(options) == 0:
                ok = False
                break
            ids.append(int(options[rng.integers(len(options))]))
        if not ok:
            continue
        pos_blocks = [segments[ids[0]].positions]
        kp_blocks = [segments[ids[0]].keypoints]
        for k in ids[1:]:
            pos_blocks.append(_blend_join(pos_blocks[-1][-1], segments[k].positions))
            kp_blocks.append(_blend_join(kp_blocks[-1][-1], segments[k].keypoints))
        accepted.append(
            ImaginedTrajectory(
                segment_ids=tuple(ids),
                positions=np.concatenate(pos_blocks),
                keypoints=np.concatenate(kp_blocks),
            )
        )
    if not accepted:
        raise ValueError(
            f"no stitch accepted in {n_attempts} attempts; "
            f"d_seg={d_seg} is too tight for this play data"
        )
    validate_junctions(accepted, segments, d_seg)
    return accepted


def validate_junctions(imagined, segments, d_seg):
    """Assert the junction invariant on every emitted trajectory."""
    for traj in imagined:
        for a, b in zip(traj.segment_ids, traj.segment_ids[1:]):
            if _junction_gap(segments[a], segments[b]) > d_seg + 1e-12:
                raise AssertionError(
                    f"junction {a}->{b} violates the d_seg={d_seg} constraint"
                )


def score_imagined(imagined, demo_single_period):
    """Negated keypoint distance to the single-period demo (higher better)."""
    kp = imagined.keypoints
    if kp.shape[1] != demo_single_period.n_keypoints:
        raise ValueError("keypoint counts differ")
    video = KeypointVideo(frames=np.clip(kp, 0.0, 1.0), dt=demo_single_period.dt)
    cfg = metrics.DistanceConfig.for_reps(1, n_keypoints=kp.shape[1])
    return -metrics.keypoint_distance(demo_single_period, video, cfg)


def waypoint_indices(length, n_waypoints):
    """Evenly index-spaced waypoint picks, first and last frames included."""
    i = np.arange(n_waypoints)
    return (i * (length - 1)) // (n_waypoints - 1)


def select_initial_candidates(imagined_pool, demo_single_period, top_n, n_waypoints):
    """Top-scoring imagined trajectories as waypoint candidates, best first."""
    if not imagined_pool:
        raise ValueError("empty imagined pool")
    if top_n > len(imagined_pool):
        raise ValueError("top_n exceeds the pool size")
    scored = [
        (score_imagined(traj, demo_single_period), i)
        for i, traj in enumerate(imagined_pool)
    ]
    scored.sort(key=lambda t: (-t[0], t[1]))
    candidates = []
    for score, i in scored[:top_n]:
        traj = imagined_pool[i]
        idx = waypoint_indices(len(traj.positions), n_waypoints)
        candidates.append(Candidate(waypoints=traj.positions[idx].copy()))
    return candidates
