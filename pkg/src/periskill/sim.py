"""Deterministic 2D particle environments for three periodic tabletop tasks.

wiping   - a rigid cloth patch that translates with the effector on contact
winding  - a position-based-dynamics rope pinned to a fixed spool
stirring - damped granular disks pushed around a tray

Environments stand in for both the robot and the perception stack: object
keypoints come from a ground-truth oracle (2D positions normalized to [0,1]
by the table extent) rather than a learned detector.  Everything is seeded
and bit-reproducible.  Physics lives in the xy plane; effector z is carried
through for trajectory recording but has no dynamic effect.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .rdmp import Trajectory

TASKS = ("wiping", "winding", "stirring")

WORKSPACE_LO = np.array([0.0, 0.0, 0.0])
WORKSPACE_HI = np.array([0.50, 0.43, 0.04])  # 50 x 43 cm table, small hover band
FRAME_DT = 0.1  # recording rate for all keypoint videos
EE_SPEED_CAP = 0.5  # m/s
EE_RADIUS = 0.02
N_KEYPOINTS = 8
DAMPING_RATE = 15.0  # 1/s exponential velocity decay for free objects
GRANULE_DAMPING_RATE = 15.0  # granules may damp differently than cloth/rope

# wiping
CLOTH_START = np.array([0.14, 0.345])
CLOTH_HALF = 0.04
CLOTH_CONTACT_MARGIN = 0.01
CLOTH_SLIP_STEP = 0.02  # per-step effector displacement above which the cloth slips
CLOTH_SWING_GAIN = 0.6  # how fast an off-center grip swings the patch trailing
CLOTH_SWING_DEADBAND = 0.02  # rotational friction: small levers cannot turn the patch
# patch keypoints: corners plus edge midpoints
_CLOTH_OFFSETS = CLOTH_HALF * np.array(
    [[-1, -1], [1, -1], [1, 1], [-1, 1], [0, -1], [1, 0], [0, 1], [-1, 0]], float
)

# winding
SPOOL_CENTER = np.array([0.25, 0.26])
SPOOL_RADIUS = 0.03
ROPE_NODES = 14
ROPE_REST = 0.0105
ROPE_ANCHOR = SPOOL_CENTER + np.array([0.0, -SPOOL_RADIUS])
ROPE_ITERS = 30
ROPE_PULL = 0.5
_ROPE_KEYPOINT_IDS = np.array([0, 1, 3, 5, 7, 9, 11, 12])  # skip the grasped end

# stirring
N_GRANULES = 20
GRANULE_RADIUS = 0.015
TRAY_CENTER = np.array([0.25, 0.215])
GRANULE_SPREAD = 0.035
TRAY_RADIUS = 0.10  # circular tray wall around TRAY_CENTER
STIR_EE_RADIUS = 0.045  # the stirring tool sweeps a wider swath
STIR_DRAG_GAIN = 0.5  # per-step velocity matching inside the drag band
STIR_DRAG_BAND = 0.01  # entrainment reach beyond hard contact

DEMO_PERIOD = 4.0  # seconds per repetition in all scripted demos
DEMO_JITTER = 0.01  # relative per-period amplitude jitter
WIPE_AMPLITUDE = 0.09
WIPE_SHIFT = 0.045  # lateral advance per period
STIR_RADIUS = 0.075
EE_START_Z = 0.02


@dataclass(frozen=True)
class KeypointVideo:
    """Frames of N_k 2D keypoints, each coordinate normalized to [0, 1]."""

    frames: np.ndarray  # (T, N_k, 2)
    dt: float

    def __post_init__(self):
        if self.frames.ndim != 3 or self.frames.shape[2] != 2:
            raise ValueError("frames must have shape (T, N_k, 2)")
        if self.frames.size and (self.frames.min() < -1e-9 or self.frames.max() > 1 + 1e-9):
            raise ValueError("keypoint coordinates must lie in [0, 1]")

    def __len__(self):
        return len(self.frames)

    @property
    def n_keypoints(self):
        return self.frames.shape[1]


@dataclass(frozen=True)
class EnvState:
    """Snapshot of one environment; env_step returns a new instance.

    grip holds contact memory where the task needs it (wiping: grip point
    in the cloth body frame plus an engaged flag); other tasks keep zeros.
    """

    task: str
    ee: np.ndarray  # (3,)
    particles: np.ndarray  # (n, 2) object particles
    velocities: np.ndarray  # (n, 2)
    time: float
    seed: int
    grip: np.ndarray = None  # (3,): body-frame grip x, y, engaged flag

    def __post_init__(self):
        if self.grip is None:
            object.__setattr__(self, "grip", np.zeros(3))


def _rng(*ids):
    return np.random.default_rng(list(ids))


def make_env(task, seed=0):
    """Canonical seeded initial layout for a task."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    rng = _rng(seed, 0xE17)
    if task == "wiping":
        center = CLOTH_START + rng.uniform(-0.01, 0.01, 2)
        particles = center + _CLOTH_OFFSETS
        ee_xy = center
    elif task == "winding":
        angle = -np.pi / 2 + rng.uniform(-0.05, 0.05)
        direction = np.array([np.cos(angle), np.sin(angle)])
        particles = ROPE_ANCHOR + np.arange(ROPE_NODES)[:, None] * ROPE_REST * direction
        ee_xy = particles[-1]
    else:
        particles = TRAY_CENTER + rng.normal(0.0, GRANULE_SPREAD, (N_GRANULES, 2))
        ee_xy = TRAY_CENTER.copy()
        # settle: clear the effector disk and pairwise overlaps so the
        # initial state is at rest
        for _ in range(30):
            kernels.granule_step_core(
                particles,
                np.zeros_like(particles),
                ee_xy,
                np.zeros(2),
                STIR_EE_RADIUS,
                GRANULE_RADIUS,
                0.0,
                0.0,
                0.0,
                FRAME_DT,
                WORKSPACE_LO[:2],
                WORKSPACE_HI[:2],
                TRAY_CENTER,
                TRAY_RADIUS,
            )
    ee = np.array([ee_xy[0], ee_xy[1], EE_START_Z])
    return EnvState(
        task=task,
        ee=ee,
        particles=np.ascontiguousarray(particles, dtype=np.float64),
        velocities=np.zeros_like(particles),
        time=0.0,
        seed=seed,
    )


def _move_effector(ee, target, dt):
    target = np.clip(np.asarray(target, float), WORKSPACE_LO, WORKSPACE_HI)
    delta = target - ee
    dist = float(np.linalg.norm(delta))
    max_step = EE_SPEED_CAP * dt
    if dist > max_step:
        delta = delta * (max_step / dist)
    return ee + delta


def _cloth_frame(particles):
    """Center and body axes of the rigid patch (from two corner points)."""
    center = particles.mean(axis=0)
    ax = particles[1] - particles[0]  # BL -> BR corner
    ax = ax / np.linalg.norm(ax)
    return center, np.array([[ax[0], -ax[1]], [ax[1], ax[0]]])  # columns: x, y axes


def _step_wiping(state, ee_new, dt, p, v, damp):
    """Grip-point drag with trailing rotation.

    On contact the effector pins whatever point of the cloth it first
    touched; dragging translates the patch with that point and swings the
    patch so its center trails the grip.  A center grip therefore drags
    without rotating, while off-center grips leave a rotation signature.
    Fast effector motion slips (grip lost, cloth coasts).
    """
    center, rot = _cloth_frame(p)
    grip = state.grip.copy()
    step_vec = ee_new[:2] - state.ee[:2]
    step_len = float(np.linalg.norm(step_vec))
    rel_body = rot.T @ (ee_new[:2] - center)
    in_box = np.max(np.abs(rel_body)) <= CLOTH_HALF + CLOTH_CONTACT_MARGIN
    slipping = step_len > CLOTH_SLIP_STEP * (dt / FRAME_DT)

    if in_box and not slipping:
        if grip[2] == 0.0:
            grip = np.array(
                [
                    np.clip(rel_body[0], -CLOTH_HALF, CLOTH_HALF),
                    np.clip(rel_body[1], -CLOTH_HALF, CLOTH_HALF),
                    1.0,
                ]
            )
        grip_world = center + rot @ grip[:2]
        lever = center - grip_world
        lever_len = float(np.linalg.norm(lever))
        if step_len > 1e-12 and lever_len > CLOTH_SWING_DEADBAND:
            drag_dir = step_vec / step_len
            trail_dir = -drag_dir
            lever_dir = lever / lever_len
            gamma = np.arctan2(
                lever_dir[0] * trail_dir[1] - lever_dir[1] * trail_dir[0],
                lever_dir @ trail_dir,
            )
            # rotation rate vanishes with the lever arm: a centered grip
            # drags without turning the patch
            reach = step_len * lever_len / (lever_len**2 + 0.02**2)
            swing = np.clip(CLOTH_SWING_GAIN * gamma * reach, -abs(gamma), abs(gamma))
            c, s = np.cos(swing), np.sin(swing)
            spin = np.array([[c, -s], [s, c]])
            p[:] = (p - grip_world) @ spin.T + grip_world
        # re-pin the grip point under the effector
        center, rot = _cloth_frame(p)
        grip_world = center + rot @ grip[:2]
        delta = ee_new[:2] - grip_world
        p += delta
        v[:] = (step_vec) / dt
    else:
        grip = np.zeros(3)
        v *= damp
        p += v[0] * dt
    # clamp by translation only so the patch stays rigid
    lo_gap = np.min(p, axis=0) - WORKSPACE_LO[:2]
    hi_gap = WORKSPACE_HI[:2] - np.max(p, axis=0)
    shift = np.where(lo_gap < 0, -lo_gap, 0.0) - np.where(hi_gap < 0, -hi_gap, 0.0)
    p += shift
    return grip


def env_step(state, ee_target, dt):
    """Advance one step: move the effector (speed-capped), update objects."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    ee_new = _move_effector(state.ee, ee_target, dt)
    p = state.particles.copy()
    v = state.velocities.copy()
    damp = float(np.exp(-DAMPING_RATE * dt))
    grip = state.grip
    if state.task == "wiping":
        grip = _step_wiping(state, ee_new, dt, p, v, damp)
    elif state.task == "winding":
        v *= damp
        p += v * dt
        prev = state.particles
        kernels.rope_step_core(
            p,
            ROPE_ANCHOR,
            ee_new[:2],
            ROPE_REST,
            ROPE_PULL,
            SPOOL_CENTER,
            SPOOL_RADIUS,
            ROPE_ITERS,
            WORKSPACE_LO[:2],
            WORKSPACE_HI[:2],
        )
        v = (p - prev) / dt * damp
    else:
        ee_vel = (ee_new[:2] - state.ee[:2]) / dt
        g_damp = float(np.exp(-GRANULE_DAMPING_RATE * dt))
        kernels.granule_step_core(
            p,
            v,
            ee_new[:2],
            ee_vel,
            STIR_EE_RADIUS,
            GRANULE_RADIUS,
            g_damp,
            STIR_DRAG_GAIN,
            STIR_DRAG_BAND,
            dt,
            WORKSPACE_LO[:2],
            WORKSPACE_HI[:2],
            TRAY_CENTER,
            TRAY_RADIUS,
        )
    return replace(
        state, ee=ee_new, particles=p, velocities=v, time=state.time + dt, grip=grip
    )


def normalize_points(points):
    """Map table coordinates to [0,1]^2 by the workspace extent."""
    extent = WORKSPACE_HI[:2] - WORKSPACE_LO[:2]
    return (np.asarray(points, float) - WORKSPACE_LO[:2]) / extent


def denormalize_points(points):
    extent = WORKSPACE_HI[:2] - WORKSPACE_LO[:2]
    return np.asarray(points, float) * extent + WORKSPACE_LO[:2]


def _true_keypoints(task, particles):
    """Object-anchored keypoint positions in world coordinates."""
    if task == "wiping":
        return particles.copy()
    if task == "winding":
        return particles[_ROPE_KEYPOINT_IDS].copy()
    groups = np.arange(N_GRANULES) % N_KEYPOINTS
    return np.stack(
        [particles[groups == k].mean(axis=0) for k in range(N_KEYPOINTS)]
    )


def observe_keypoints(state):
    """Keypoint oracle: 8 object-anchored points per task.

    Keypoints sit on the manipulated objects, never on the effector.
    """
    return np.clip(normalize_points(_true_keypoints(state.task, state.particles)), 0.0, 1.0)


def _demo_program(task, seed):
    """Per-task scripted effector target as a function of time."""
    rng = _rng(seed, 0xDE30)
    jitter = 1.0 + DEMO_JITTER * rng.standard_normal(64)  # per-period factors

    if task == "wiping":
        env = make_env(task, seed)
        c = env.particles.mean(axis=0)

        def program(t):
            k = int(t // DEMO_PERIOD)
            x = c[0] + WIPE_AMPLITUDE * jitter[k] * np.sin(2 * np.pi * t / DEMO_PERIOD)
            y = c[1] - WIPE_SHIFT * t / DEMO_PERIOD
            return np.array([x, y, EE_START_Z])

    elif task == "winding":
        env = make_env(task, seed)
        # orbit inside the rope's full extension so the chain stays slack
        radius = 0.8 * float(np.linalg.norm(env.particles[-1] - SPOOL_CENTER))
        a0 = float(
            np.arctan2(
                env.particles[-1, 1] - SPOOL_CENTER[1],
                env.particles[-1, 0] - SPOOL_CENTER[0],
            )
        )

        def program(t):
            k = int(t // DEMO_PERIOD)
            r = radius * jitter[k]
            a = a0 + 2 * np.pi * t / DEMO_PERIOD
            return np.array(
                [
                    SPOOL_CENTER[0] + r * np.cos(a),
                    SPOOL_CENTER[1] + r * np.sin(a),
                    EE_START_Z,
                ]
            )

    else:

        def program(t):
            k = int(t // DEMO_PERIOD)
            r = STIR_RADIUS * jitter[k]
            a = 2 * np.pi * t / DEMO_PERIOD
            return np.array(
                [
                    TRAY_CENTER[0] + r * np.cos(a),
                    TRAY_CENTER[1] + r * np.sin(a),
                    EE_START_Z,
                ]
            )

    return program


HUMAN_STIR_RADIUS = 0.065  # the demonstrator's implement is wider than the robot's


def _record_program(env, program, n_frames):
    frames = np.empty((n_frames, N_KEYPOINTS, 2))
    positions = np.empty((n_frames, 3))
    frames[0] = observe_keypoints(env)
    positions[0] = env.ee
    for i in range(1, n_frames):
        env = env_step(env, program(i * FRAME_DT), FRAME_DT)
        frames[i] = observe_keypoints(env)
        positions[i] = env.ee
    return frames, positions


def scripted_demo(task, n_rep, seed=0):
    """Hand-authored periodic demo; returns (keypoint video, exemplar path).

    The keypoint video comes from the demonstrator's embodiment (a wider
    stirring implement than the robot's); the exemplar is the same program
    executed with the robot's tooling, i.e. the robot trajectory that
    reproduces the demonstrated object effect.  The exemplar is meant for
    evaluation only; learners see the keypoint video.
    """
    if n_rep < 2:
        raise ValueError("demos must contain at least 2 repetitions")
    program = _demo_program(task, seed)
    n_frames = int(round(n_rep * DEMO_PERIOD / FRAME_DT))
    global STIR_EE_RADIUS
    if task == "stirring":
        robot_radius = STIR_EE_RADIUS
        STIR_EE_RADIUS = HUMAN_STIR_RADIUS
        try:
            frames, _ = _record_program(make_env(task, seed), program, n_frames)
        finally:
            STIR_EE_RADIUS = robot_radius
        _, positions = _record_program(make_env(task, seed), program, n_frames)
    else:
        frames, positions = _record_program(make_env(task, seed), program, n_frames)
    video = KeypointVideo(frames=frames, dt=FRAME_DT)
    exemplar = Trajectory(dt=FRAME_DT, points=positions)
    return video, exemplar


def execute_plan(env, plan, frame_dt=FRAME_DT):
    """Track a planned effector trajectory from a reset state.

    The plan (typically integrated at a finer dt) is resampled to the
    recording rate; the effector chases each target under the speed cap.
    Returns the executed effector trajectory and keypoint video, both at
    frame_dt and frame-aligned starting from the initial state.
    """
    stride = max(1, int(round(frame_dt / plan.dt)))
    targets = plan.points[stride::stride]
    if (len(plan) - 1) % stride == 0 and len(targets):
        targets = targets[:-1]  # frames cover [0, duration) like recordings do
    n_frames = len(targets) + 1
    frames = np.empty((n_frames, N_KEYPOINTS, 2))
    positions = np.empty((n_frames, 3))
    frames[0] = observe_keypoints(env)
    positions[0] = env.ee
    for i, target in enumerate(targets, start=1):
        env = env_step(env, target, frame_dt)
        frames[i] = observe_keypoints(env)
        positions[i] = env.ee
    video = KeypointVideo(frames=frames, dt=frame_dt)
    return Trajectory(dt=frame_dt, points=positions), video


PLAY_WAYPOINT_PERIOD = 1.8  # seconds between random play waypoints
PLAY_OBJECT_BIAS = 0.65  # fraction of waypoints drawn near the object region
PLAY_OBJECT_SPREAD = 0.07

_OBJECT_REGION = {
    "wiping": CLOTH_START,
    "winding": SPOOL_CENTER,
    "stirring": TRAY_CENTER,
}


def _random_program(duration, seed_ids, start, task):
    """Smooth random waypoint spline; half the waypoints cluster around the
    object region (interactions concentrate where the objects sit)."""
    rng = _rng(*seed_ids, 0x97A1)
    n_wp = max(4, int(np.ceil(duration / PLAY_WAYPOINT_PERIOD)) + 1)
    margin = 0.04
    lo = WORKSPACE_LO + [margin, margin, 0.005]
    hi = WORKSPACE_HI - [margin, margin, 0.005]
    waypoints = rng.uniform(lo, hi, size=(n_wp, 3))
    near = rng.random(n_wp) < PLAY_OBJECT_BIAS
    center = _OBJECT_REGION[task]
    local = center + rng.normal(0.0, PLAY_OBJECT_SPREAD, size=(n_wp, 2))
    waypoints[near, :2] = local[near]
    waypoints = np.clip(waypoints, lo, hi)
    waypoints[0] = start
    knots = np.linspace(0.0, duration, n_wp)
    return CubicSpline(knots, waypoints, axis=0, bc_type="natural")


def _record_stream(env, program, n_frames):
    frames = np.empty((n_frames, N_KEYPOINTS, 2))
    positions = np.empty((n_frames, 3))
    frames[0] = observe_keypoints(env)
    positions[0] = env.ee
    for i in range(1, n_frames):
        env = env_step(env, program(i * FRAME_DT), FRAME_DT)
        frames[i] = observe_keypoints(env)
        positions[i] = env.ee
    return KeypointVideo(frames=frames, dt=FRAME_DT), positions


def collect_play(task, duration, seed=0, env_seed=None):
    """Record unpaired robot and human-surrogate play streams.

    Both streams follow independent smooth random waypoint splines in the
    same (seeded) environment layout; only the robot stream carries effector
    positions.  Returns an imagine.PlayDataset.
    """
    from .imagine import PlayDataset

    if duration <= 0:
        raise ValueError("duration must be positive")
    if env_seed is None:
        env_seed = seed
    n_frames = int(round(duration / FRAME_DT))

    robot_env = make_env(task, env_seed)
    robot_prog = _random_program(duration, (seed, 1), robot_env.ee, task)
    robot_video, robot_positions = _record_stream(robot_env, robot_prog, n_frames)

    human_env = make_env(task, env_seed)
    human_prog = _random_program(duration, (seed, 2), human_env.ee, task)
    human_video, _ = _record_stream(human_env, human_prog, n_frames)

    return PlayDataset(
        robot_positions=robot_positions,
        robot_keypoints=robot_video,
        human_keypoints=human_video,
        dt=FRAME_DT,
    )
