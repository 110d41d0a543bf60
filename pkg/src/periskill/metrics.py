"""Scoring: keypoint distance, period estimation, and the performance metric.

The keypoint distance is the mean per-keypoint L1 gap between two videos
sub-sampled to a common length with index-proportional pairing (no time
warping); it is the optimization objective.  The performance metric compares
an executed effector path against a withheld exemplar and maps the mean L1
error linearly to [0, 1]; it is comparable across methods that optimize
different objectives.
"""

from dataclasses import dataclass

import numpy as np

from . import sim
from .sim import KeypointVideo

CONFIDENCE_THRESHOLD = 0.3
SUBSAMPLE_PER_REP = 10  # N_s = 10 * n_rep


class NoPeriodicityError(ValueError):
    """Raised when a video shows no reliable repetition."""


@dataclass(frozen=True)
class DistanceConfig:
    n_subsample: int
    n_keypoints: int

    def __post_init__(self):
        if self.n_subsample < 1 or self.n_keypoints < 1:
            raise ValueError("n_subsample and n_keypoints must be >= 1")

    @classmethod
    def for_reps(cls, n_rep, n_keypoints=sim.N_KEYPOINTS):
        return cls(n_subsample=SUBSAMPLE_PER_REP * n_rep, n_keypoints=n_keypoints)


@dataclass(frozen=True)
class PeriodEstimate:
    n_rep: int
    period_frames: float
    confidence: float


def subsample_indices(length, count):
    """count indices evenly spread over [0, length), ends included."""
    if count == 1:
        return np.zeros(1, dtype=int)
    return np.rint(np.arange(count) * (length - 1) / (count - 1)).astype(int)


def subsample(video, count):
    """Reduce a video to ``count`` evenly spaced frames."""
    if len(video) == 0:
        raise ValueError("cannot subsample an empty video")
    idx = subsample_indices(len(video), count)
    return KeypointVideo(frames=video.frames[idx], dt=video.dt)


def keypoint_distance(video_a, video_b, cfg):
    """Mean per-keypoint L1 distance between index-aligned sub-sampled frames.

    Bounded by [0, 2] since every coordinate lives in [0, 1].
    """
    if video_a.n_keypoints != video_b.n_keypoints:
        raise ValueError("keypoint counts differ")
    if len(video_a) == 0 or len(video_b) == 0:
        raise ValueError("videos must be non-empty")
    a = subsample(video_a, cfg.n_subsample).frames
    b = subsample(video_b, cfg.n_subsample).frames
    return float(np.abs(a - b).sum() / (cfg.n_subsample * cfg.n_keypoints))


def _principal_projection(video):
    """1D signal: detrended keypoint coordinates projected onto their first
    principal direction.

    A per-coordinate quadratic detrend removes the slow drift that periodic
    manipulation accumulates (lateral wiping shift, granular rearrangement);
    without it that drift hijacks both the principal direction and the
    autocorrelation."""
    t_len = len(video)
    flat = video.frames.reshape(t_len, -1)
    t = np.arange(t_len, dtype=float)
    basis = np.stack([t * t, t, np.ones(t_len)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, flat, rcond=None)
    detrended = flat - basis @ coef
    _, _, vt = np.linalg.svd(detrended, full_matrices=False)
    return detrended @ vt[0]


def estimate_periods(video):
    """Count repetitions via the autocorrelation of a 1D keypoint projection.

    The length-normalized autocorrelation is scanned over lags in
    [T/10, T/2]; the peak is the smallest near-top interior local maximum
    (a residual monotone trend has none, and period multiples tie with the
    fundamental), refined parabolically.  Raises NoPeriodicityError when
    the peak correlation is below 0.3.
    """
    t_len = len(video)
    if t_len < 10:
        raise NoPeriodicityError("video too short for period estimation")
    s = _principal_projection(video)
    power = float(s @ s)
    if power < 1e-18:
        raise NoPeriodicityError("video shows no motion")
    lag_min = max(2, int(np.ceil(t_len / 10)))
    lag_max = t_len // 2
    if lag_max <= lag_min:
        raise NoPeriodicityError("video too short for the lag window")
    lags = np.arange(lag_min, lag_max + 1)
    n_sig = len(s)
    mean_power = power / n_sig
    corr = np.array(
        [float(s[: n_sig - k] @ s[k:]) / (n_sig - k) / mean_power for k in lags]
    )
    smoothed = np.convolve(corr, np.ones(3) / 3.0, mode="same")
    interior = [
        i
        for i in range(1, len(corr) - 1)
        if smoothed[i] >= smoothed[i - 1] and smoothed[i] >= smoothed[i + 1]
    ]
    if interior:
        top = max(corr[i] for i in interior)
        # multiples of the period tie with the fundamental under the
        # length-normalized estimate; prefer the smallest near-top lag
        best = min(i for i in interior if corr[i] >= top - 0.05 * abs(top))
    else:
        best = int(np.argmax(corr))
    confidence = float(min(1.0, max(corr[best], 0.0)))
    if confidence < CONFIDENCE_THRESHOLD:
        raise NoPeriodicityError(
            f"autocorrelation peak {confidence:.3f} below {CONFIDENCE_THRESHOLD}"
        )
    period = float(lags[best])
    if 0 < best < len(corr) - 1:
        y0, y1, y2 = corr[best - 1], corr[best], corr[best + 1]
        denom = y0 - 2 * y1 + y2
        if abs(denom) > 1e-15:
            period += 0.5 * (y0 - y2) / denom
    n_rep = max(1, int(round(t_len / period)))
    return PeriodEstimate(n_rep=n_rep, period_frames=period, confidence=confidence)


def split_single_period(video, estimate):
    """First period of a demo, per the rounded period length."""
    period = int(round(estimate.period_frames))
    if period > len(video):
        raise ValueError("estimated period exceeds video length")
    if estimate.n_rep <= 1:
        return video
    return KeypointVideo(frames=video.frames[:period], dt=video.dt)


def workspace_l1_diagonal(bounds_lo=sim.WORKSPACE_LO, bounds_hi=sim.WORKSPACE_HI):
    return float(np.sum(np.asarray(bounds_hi) - np.asarray(bounds_lo)))


def performance(exemplar, execution, bounds_lo=None, bounds_hi=None):
    """Path similarity in [0, 1]: 1 - (mean L1 error / workspace L1 diagonal).

    The execution is sub-sampled to the exemplar's length with the same
    index-proportional rule used for videos; the score clamps at 0 once the
    mean error reaches the workspace diagonal and is invariant to shifting
    both paths by the same vector.
    """
    lo = sim.WORKSPACE_LO if bounds_lo is None else np.asarray(bounds_lo, float)
    hi = sim.WORKSPACE_HI if bounds_hi is None else np.asarray(bounds_hi, float)
    ref = np.asarray(exemplar.points, float)
    run = np.asarray(execution.points, float)
    idx = subsample_indices(len(run), len(ref))
    raw = float(np.abs(ref - run[idx]).sum(axis=1).mean())
    d_max = workspace_l1_diagonal(lo, hi)
    return max(0.0, 1.0 - raw / d_max)
