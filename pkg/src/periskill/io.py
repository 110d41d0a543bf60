"""File formats: trajectory/keypoint CSVs, parameter documents, trial logs.

Floats are written with repr (shortest round-trip form) so identical runs
produce byte-identical files.
"""

import numpy as np

from .imagine import Candidate, PlayDataset
from .rdmp import RdmpParams, Trajectory
from .sim import KeypointVideo


def _fmt(x):
    return repr(float(x))


def write_trajectory(path, traj):
    """CSV with header t,x,y,z; one row per step, SI units."""
    with open(path, "w") as fh:
        fh.write("t,x,y,z\n")
        for i, p in enumerate(traj.points):
            fh.write(f"{_fmt(i * traj.dt)},{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])}\n")


def read_trajectory(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if len(data) < 2:
        raise ValueError("trajectory files need at least 2 rows to recover dt")
    dt = float(data[1, 0] - data[0, 0])
    return Trajectory(dt=dt, points=data[:, 1:4])


def write_keypoint_video(path, video):
    """CSV with header t,k0x,k0y,...; normalized coordinates."""
    n_k = video.n_keypoints
    header = "t," + ",".join(f"k{i}x,k{i}y" for i in range(n_k))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i, frame in enumerate(video.frames):
            row = [_fmt(i * video.dt)]
            row.extend(_fmt(v) for v in frame.ravel())
            fh.write(",".join(row) + "\n")


def read_keypoint_video(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if len(data) < 2:
        raise ValueError("keypoint files need at least 2 rows to recover dt")
    dt = float(data[1, 0] - data[0, 0])
    frames = data[:, 1:].reshape(len(data), -1, 2)
    return KeypointVideo(frames=frames, dt=dt)


def write_play_dataset(prefix, play):
    """Positions CSV plus two keypoint CSVs under a common path prefix."""
    write_trajectory(f"{prefix}_positions.csv", Trajectory(dt=play.dt, points=play.robot_positions))
    write_keypoint_video(f"{prefix}_robot_keypoints.csv", play.robot_keypoints)
    write_keypoint_video(f"{prefix}_human_keypoints.csv", play.human_keypoints)


def read_play_dataset(prefix):
    positions = read_trajectory(f"{prefix}_positions.csv")
    robot = read_keypoint_video(f"{prefix}_robot_keypoints.csv")
    human = read_keypoint_video(f"{prefix}_human_keypoints.csv")
    return PlayDataset(
        robot_positions=positions.points,
        robot_keypoints=robot,
        human_keypoints=human,
        dt=positions.dt,
    )


def _vector_text(values):
    return ",".join(_fmt(v) for v in np.asarray(values, float).ravel())


def params_to_text(params):
    """Flat key=value document for a fitted primitive."""
    lines = [
        f"n_dims={params.n_dims}",
        f"n_basis={params.n_basis}",
        f"amplitude={_fmt(params.amplitude)}",
        f"tau={_fmt(params.tau)}",
        f"alpha_z={_fmt(params.alpha_z)}",
        f"beta_z={_fmt(params.beta_z)}",
        f"alpha_g={_fmt(params.alpha_g)}",
        f"goal={_vector_text(params.goal)}",
        f"goal_shift={_vector_text(params.goal_shift)}",
        f"centers={_vector_text(params.centers)}",
        f"widths={_vector_text(params.widths)}",
    ]
    for d in range(params.n_dims):
        lines.append(f"weights_{d}={_vector_text(params.weights[d])}")
    return "\n".join(lines) + "\n"


def params_from_text(text):
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    n_dims = int(fields["n_dims"])
    vec = lambda key: np.array([float(v) for v in fields[key].split(",")])
    return RdmpParams(
        weights=np.stack([vec(f"weights_{d}") for d in range(n_dims)]),
        centers=vec("centers"),
        widths=vec("widths"),
        amplitude=float(fields["amplitude"]),
        tau=float(fields["tau"]),
        alpha_z=float(fields["alpha_z"]),
        beta_z=float(fields["beta_z"]),
        goal=vec("goal"),
        goal_shift=vec("goal_shift"),
        alpha_g=float(fields["alpha_g"]),
    )


def save_params(path, params):
    with open(path, "w") as fh:
        fh.write(params_to_text(params))


def load_params(path):
    with open(path) as fh:
        return params_from_text(fh.read())


def trial_log_header(n_waypoints):
    cols = ["trial", "provenance", "objective", "performance"]
    for i in range(n_waypoints):
        cols.extend([f"w{i}x", f"w{i}y", f"w{i}z"])
    return ",".join(cols)


def write_trial_log(path, records, n_waypoints):
    """TrialRecord rows with flattened candidate waypoints."""
    with open(path, "w") as fh:
        fh.write(trial_log_header(n_waypoints) + "\n")
        for r in records:
            row = [str(r.trial), r.provenance, _fmt(r.objective), _fmt(r.performance)]
            row.extend(_fmt(v) for v in r.candidate.flat)
            fh.write(",".join(row) + "\n")


def read_trial_log(path):
    from .bo import TrialRecord

    records = []
    with open(path) as fh:
        header = fh.readline()
        n_cols = len(header.strip().split(","))
        n_waypoints = (n_cols - 4) // 3
        for line in fh:
            parts = line.strip().split(",")
            waypoints = np.array([float(v) for v in parts[4:]]).reshape(n_waypoints, 3)
            records.append(
                TrialRecord(
                    trial=int(parts[0]),
                    candidate=Candidate(waypoints=waypoints),
                    objective=float(parts[2]),
                    performance=float(parts[3]),
                    provenance=parts[1],
                )
            )
    return records
