import numpy as np
import pytest

from periskill import metrics, sim


class TestMakeEnv:
    @pytest.mark.parametrize("task", sim.TASKS)
    def test_seeded_determinism(self, task):
        a = sim.make_env(task, seed=3)
        b = sim.make_env(task, seed=3)
        assert np.array_equal(a.particles, b.particles)
        assert np.array_equal(a.ee, b.ee)

    @pytest.mark.parametrize("task", sim.TASKS)
    def test_eight_keypoints_in_unit_square(self, task):
        env = sim.make_env(task, seed=0)
        kp = sim.observe_keypoints(env)
        assert kp.shape == (sim.N_KEYPOINTS, 2)
        assert kp.min() >= 0.0 and kp.max() <= 1.0

    def test_unknown_task_rejected(self):
        with pytest.raises(ValueError, match="unknown task"):
            sim.make_env("folding", seed=0)

    def test_seeds_vary_layout(self):
        a = sim.make_env("wiping", seed=0)
        b = sim.make_env("wiping", seed=1)
        assert not np.array_equal(a.particles, b.particles)


class TestEnvStep:
    @pytest.mark.parametrize("task", sim.TASKS)
    def test_stationary_effector_dissipates(self, task):
        env = sim.make_env(task, seed=0)
        rng = np.random.default_rng(0)
        # excite the objects, then hold still
        for _ in range(10):
            target = rng.uniform(sim.WORKSPACE_LO, sim.WORKSPACE_HI)
            env = sim.env_step(env, target, sim.FRAME_DT)
        hold = env.ee.copy()
        speeds = []
        for _ in range(40):
            env = sim.env_step(env, hold, sim.FRAME_DT)
            speeds.append(float(np.abs(env.velocities).sum()))
        # constraint projection causes micro-adjustments at the 1e-6 level
        assert all(b <= a + 1e-5 for a, b in zip(speeds, speeds[1:]))

    def test_rope_spacing_under_random_targets(self):
        env = sim.make_env("winding", seed=1)
        rng = np.random.default_rng(1)
        for _ in range(100):
            target = rng.uniform(sim.WORKSPACE_LO, sim.WORKSPACE_HI)
            env = sim.env_step(env, target, sim.FRAME_DT)
            gaps = np.linalg.norm(np.diff(env.particles, axis=0), axis=1)
            assert np.all(np.abs(gaps - sim.ROPE_REST) <= 0.1 * sim.ROPE_REST)

    def test_cloth_internal_distances_rigid(self):
        # the patch may rotate, but pairwise distances stay fixed
        env = sim.make_env("wiping", seed=2)
        ref = env.particles
        d_ref = np.linalg.norm(ref[:, None, :] - ref[None, :, :], axis=2)
        rng = np.random.default_rng(2)
        for _ in range(50):
            target = rng.uniform(sim.WORKSPACE_LO, sim.WORKSPACE_HI)
            env = sim.env_step(env, target, sim.FRAME_DT)
            cur = env.particles
            d_cur = np.linalg.norm(cur[:, None, :] - cur[None, :, :], axis=2)
            assert np.abs(d_cur - d_ref).max() < 1e-9

    def test_stirring_spreads_granules(self):
        # circle through the granule pile for 3 periods; churned material
        # must end up more spread than the initial cluster
        env = sim.make_env("stirring", seed=0)
        var0 = float(env.particles.var(axis=0).sum())
        for i in range(1, int(3 * sim.DEMO_PERIOD / sim.FRAME_DT) + 1):
            t = i * sim.FRAME_DT
            a = 2 * np.pi * t / sim.DEMO_PERIOD
            target = np.array(
                [
                    sim.TRAY_CENTER[0] + 0.02 * np.cos(a),
                    sim.TRAY_CENTER[1] + 0.02 * np.sin(a),
                    sim.EE_START_Z,
                ]
            )
            env = sim.env_step(env, target, sim.FRAME_DT)
        assert float(env.particles.var(axis=0).sum()) > var0

    def test_particles_stay_in_bounds(self):
        for task in sim.TASKS:
            env = sim.make_env(task, seed=4)
            rng = np.random.default_rng(4)
            for _ in range(60):
                target = rng.uniform(
                    sim.WORKSPACE_LO - 0.2, sim.WORKSPACE_HI + 0.2
                )  # out-of-bounds targets get clamped
                env = sim.env_step(env, target, sim.FRAME_DT)
                assert np.all(env.particles >= sim.WORKSPACE_LO[:2] - 1e-12)
                assert np.all(env.particles <= sim.WORKSPACE_HI[:2] + 1e-12)

    def test_step_is_pure(self):
        env = sim.make_env("stirring", seed=5)
        before = env.particles.copy()
        sim.env_step(env, sim.WORKSPACE_HI, sim.FRAME_DT)
        assert np.array_equal(env.particles, before)


class TestObserveKeypoints:
    def test_corner_and_center_normalization(self):
        lo = sim.WORKSPACE_LO[:2]
        hi = sim.WORKSPACE_HI[:2]
        np.testing.assert_allclose(sim.normalize_points(lo), [0.0, 0.0])
        np.testing.assert_allclose(sim.normalize_points((lo + hi) / 2), [0.5, 0.5])

    def test_normalization_roundtrip(self):
        rng = np.random.default_rng(6)
        pts = rng.uniform(sim.WORKSPACE_LO[:2], sim.WORKSPACE_HI[:2], (50, 2))
        back = sim.denormalize_points(sim.normalize_points(pts))
        assert np.abs(back - pts).max() < 1e-9


class TestScriptedDemo:
    @pytest.mark.parametrize("task", sim.TASKS)
    def test_determinism(self, task):
        d1, e1 = sim.scripted_demo(task, 3, seed=7)
        d2, e2 = sim.scripted_demo(task, 3, seed=7)
        assert np.array_equal(d1.frames, d2.frames)
        assert np.array_equal(e1.points, e2.points)

    def test_rejects_single_rep(self):
        with pytest.raises(ValueError):
            sim.scripted_demo("wiping", 1, seed=0)

    def test_frame_count(self):
        demo, exemplar = sim.scripted_demo("winding", 4, seed=0)
        expected = int(round(4 * sim.DEMO_PERIOD / sim.FRAME_DT))
        assert len(demo) == expected
        assert len(exemplar) == expected

    def test_exemplar_self_performance(self):
        _, exemplar = sim.scripted_demo("stirring", 3, seed=1)
        assert metrics.performance(exemplar, exemplar) == pytest.approx(1.0)

    @pytest.mark.parametrize("task", sim.TASKS)
    @pytest.mark.parametrize("n_rep", [2, 3, 4, 5, 6])
    def test_period_estimate_recovers_rep_count(self, task, n_rep):
        demo, _ = sim.scripted_demo(task, n_rep, seed=0)
        est = metrics.estimate_periods(demo)
        assert est.n_rep == n_rep


class TestCollectPlay:
    def test_ten_minutes_is_6000_frames(self):
        play = sim.collect_play("wiping", duration=600.0, seed=0)
        assert len(play) == 6000
        assert len(play.robot_keypoints) == 6000
        assert len(play.human_keypoints) == 6000

    def test_positions_inside_bounds(self):
        play = sim.collect_play("stirring", duration=30.0, seed=1)
        assert np.all(play.robot_positions >= sim.WORKSPACE_LO - 1e-12)
        assert np.all(play.robot_positions <= sim.WORKSPACE_HI + 1e-12)

    def test_streams_unpaired_but_compatible(self):
        play = sim.collect_play("winding", duration=20.0, seed=2)
        assert play.robot_keypoints.n_keypoints == play.human_keypoints.n_keypoints
        assert not np.array_equal(
            play.robot_keypoints.frames, play.human_keypoints.frames
        )

    def test_determinism(self):
        a = sim.collect_play("wiping", duration=15.0, seed=3)
        b = sim.collect_play("wiping", duration=15.0, seed=3)
        assert np.array_equal(a.robot_positions, b.robot_positions)
        assert np.array_equal(a.robot_keypoints.frames, b.robot_keypoints.frames)
