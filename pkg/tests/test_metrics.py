import numpy as np
import pytest

from periskill import metrics, sim
from periskill.rdmp import Trajectory
from periskill.sim import KeypointVideo


def video_from(frames, dt=0.1):
    return KeypointVideo(frames=np.asarray(frames, float), dt=dt)


def constant_video(xy, n_frames=20, n_kp=4):
    frames = np.tile(np.asarray(xy, float), (n_frames, n_kp, 1))
    return video_from(frames)


class TestSubsample:
    def test_identity_when_lengths_match(self):
        rng = np.random.default_rng(0)
        v = video_from(rng.uniform(size=(15, 3, 2)))
        out = metrics.subsample(v, 15)
        assert np.array_equal(out.frames, v.frames)

    def test_two_frames_are_ends(self):
        rng = np.random.default_rng(1)
        v = video_from(rng.uniform(size=(9, 2, 2)))
        out = metrics.subsample(v, 2)
        assert np.array_equal(out.frames[0], v.frames[0])
        assert np.array_equal(out.frames[1], v.frames[-1])

    def test_index_formula_70_to_10(self):
        idx = metrics.subsample_indices(70, 10)
        assert idx.tolist() == [0, 8, 15, 23, 31, 38, 46, 54, 61, 69]

    def test_single_frame(self):
        assert metrics.subsample_indices(30, 1).tolist() == [0]

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        v = video_from(rng.uniform(size=(33, 2, 2)))
        once = metrics.subsample(v, 10)
        twice = metrics.subsample(once, 10)
        assert np.array_equal(once.frames, twice.frames)


class TestKeypointDistance:
    def test_identity_is_zero(self):
        rng = np.random.default_rng(3)
        v = video_from(rng.uniform(size=(25, 8, 2)))
        cfg = metrics.DistanceConfig(n_subsample=10, n_keypoints=8)
        assert metrics.keypoint_distance(v, v, cfg) == 0.0

    def test_uniform_offset(self):
        rng = np.random.default_rng(4)
        a = rng.uniform(0.1, 0.8, size=(30, 8, 2))
        b = a.copy()
        b[:, :, 0] += 0.1
        cfg = metrics.DistanceConfig(n_subsample=10, n_keypoints=8)
        d = metrics.keypoint_distance(video_from(a), video_from(b), cfg)
        assert d == pytest.approx(0.1, abs=1e-12)

    def test_opposite_corners_attain_bound(self):
        a = constant_video([0.0, 0.0])
        b = constant_video([1.0, 1.0])
        cfg = metrics.DistanceConfig(n_subsample=5, n_keypoints=4)
        assert metrics.keypoint_distance(a, b, cfg) == pytest.approx(2.0, abs=1e-12)

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(5)
        cfg = metrics.DistanceConfig(n_subsample=7, n_keypoints=3)
        for _ in range(20):
            a = video_from(rng.uniform(size=(12, 3, 2)))
            b = video_from(rng.uniform(size=(18, 3, 2)))
            dab = metrics.keypoint_distance(a, b, cfg)
            dba = metrics.keypoint_distance(b, a, cfg)
            assert dab == pytest.approx(dba, rel=1e-12)
            assert 0.0 <= dab <= 2.0

    def test_keypoint_count_mismatch(self):
        cfg = metrics.DistanceConfig(n_subsample=5, n_keypoints=4)
        with pytest.raises(ValueError):
            metrics.keypoint_distance(
                constant_video([0.5, 0.5], n_kp=4),
                constant_video([0.5, 0.5], n_kp=6),
                cfg,
            )

    def test_config_rule(self):
        cfg = metrics.DistanceConfig.for_reps(3)
        assert cfg.n_subsample == 30
        assert cfg.n_keypoints == sim.N_KEYPOINTS


class TestEstimatePeriods:
    def test_sinusoid_four_cycles(self):
        t = np.arange(400)
        frames = np.zeros((400, 3, 2))
        frames[:, :, 0] = 0.5 + 0.3 * np.sin(2 * np.pi * t / 100)[:, None]
        frames[:, :, 1] = 0.5
        est = metrics.estimate_periods(video_from(frames))
        assert est.n_rep == 4
        assert est.period_frames == pytest.approx(100, abs=1)

    def test_constant_video_raises(self):
        with pytest.raises(metrics.NoPeriodicityError):
            metrics.estimate_periods(constant_video([0.5, 0.5], n_frames=100))

    def test_scripted_demo_exact_and_noise_tolerant(self):
        demo, _ = sim.scripted_demo("wiping", 3, seed=0)
        est = metrics.estimate_periods(demo)
        assert est.n_rep == 3
        rng = np.random.default_rng(0)
        hits = 0
        for _ in range(10):
            noisy = np.clip(demo.frames + rng.normal(0, 0.05, demo.frames.shape), 0, 1)
            try:
                est = metrics.estimate_periods(video_from(noisy))
                hits += abs(est.n_rep - 3) <= 1
            except metrics.NoPeriodicityError:
                pass
        assert hits >= 9

    def test_confidence_within_unit_interval(self):
        demo, _ = sim.scripted_demo("stirring", 4, seed=2)
        est = metrics.estimate_periods(demo)
        assert 0.0 <= est.confidence <= 1.0


class TestSplitSinglePeriod:
    def test_single_rep_returns_full_video(self):
        rng = np.random.default_rng(6)
        v = video_from(rng.uniform(size=(40, 2, 2)))
        est = metrics.PeriodEstimate(n_rep=1, period_frames=40.0, confidence=1.0)
        out = metrics.split_single_period(v, est)
        assert np.array_equal(out.frames, v.frames)

    def test_400_frames_period_100(self):
        rng = np.random.default_rng(7)
        v = video_from(rng.uniform(size=(400, 2, 2)))
        est = metrics.PeriodEstimate(n_rep=4, period_frames=100.0, confidence=1.0)
        assert len(metrics.split_single_period(v, est)) == 100

    def test_period_longer_than_video_rejected(self):
        v = constant_video([0.2, 0.2], n_frames=30)
        est = metrics.PeriodEstimate(n_rep=2, period_frames=50.0, confidence=1.0)
        with pytest.raises(ValueError):
            metrics.split_single_period(v, est)

    def test_concatenated_split_reconstructs_periodic_video(self):
        period = 50
        t = np.arange(200)
        frames = np.zeros((200, 2, 2))
        frames[:, :, 0] = 0.5 + 0.2 * np.sin(2 * np.pi * t / period)[:, None]
        frames[:, :, 1] = 0.5 + 0.2 * np.cos(2 * np.pi * t / period)[:, None]
        v = video_from(frames)
        est = metrics.estimate_periods(v)
        part = metrics.split_single_period(v, est)
        recon = np.concatenate([part.frames] * est.n_rep)
        assert recon.shape == frames.shape
        assert np.abs(recon - frames).max() < 1e-9


class TestPerformance:
    def test_self_match(self):
        rng = np.random.default_rng(8)
        traj = Trajectory(dt=0.1, points=rng.uniform(size=(50, 3)))
        assert metrics.performance(traj, traj) == 1.0

    def test_clamps_at_zero(self):
        a = Trajectory(dt=0.1, points=np.zeros((10, 3)))
        b = Trajectory(dt=0.1, points=np.full((10, 3), 10.0))
        assert metrics.performance(a, b) == 0.0

    def test_constant_execution_vs_sinusoid_exemplar(self):
        # brute-force oracle: mean |A sin| over the sampled grid
        A, T_e = 0.1, 160
        t = np.arange(T_e)
        pts = np.zeros((T_e, 3))
        pts[:, 0] = 0.25 + A * np.sin(2 * np.pi * t / 40)
        pts[:, 1] = 0.2
        exemplar = Trajectory(dt=0.1, points=pts)
        execution = Trajectory(dt=0.1, points=np.tile([0.25, 0.2, 0.0], (T_e, 1)))
        expected_raw = np.abs(A * np.sin(2 * np.pi * t / 40)).mean()
        expected = 1.0 - expected_raw / metrics.workspace_l1_diagonal()
        assert metrics.performance(exemplar, execution) == pytest.approx(
            expected, abs=1e-12
        )

    def test_translation_invariance(self):
        rng = np.random.default_rng(9)
        a = rng.uniform(0.1, 0.3, size=(30, 3))
        b = rng.uniform(0.1, 0.3, size=(30, 3))
        shift = np.array([0.05, -0.03, 0.0])
        p1 = metrics.performance(Trajectory(dt=0.1, points=a), Trajectory(dt=0.1, points=b))
        p2 = metrics.performance(
            Trajectory(dt=0.1, points=a + shift), Trajectory(dt=0.1, points=b + shift)
        )
        assert p1 == pytest.approx(p2, abs=1e-12)

    def test_subsamples_execution_to_exemplar_length(self):
        rng = np.random.default_rng(10)
        ref = rng.uniform(0.1, 0.3, size=(20, 3))
        dense = np.repeat(ref, 5, axis=0)  # same path, 5x oversampled
        p = metrics.performance(
            Trajectory(dt=0.1, points=ref), Trajectory(dt=0.02, points=dense)
        )
        assert p > 0.95
