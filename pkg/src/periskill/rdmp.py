"""Rhythmic dynamic movement primitives.

A rhythmic DMP is a critically damped point attractor driven by a periodic
forcing term built from cyclic basis functions.  The phase advances linearly
(tau * dphi/dt = 1, one period per 2*pi), so a fitted primitive can be
replayed for any number of periods and rescaled in speed and amplitude at
run time.  A per-period goal shift, relaxed through a first-order filter,
lets the limit cycle translate over time (wiping-style motions).
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels

ALPHA_Z = 25.0
BETA_Z = ALPHA_Z / 4.0  # critical damping
ALPHA_G = ALPHA_Z / 2.0  # goal-relaxation gain
DEFAULT_N_BASIS = 25
WIDTH_FACTOR = 2.5  # h_i = WIDTH_FACTOR * n_basis
STEPS_PER_PERIOD = 200


@dataclass(frozen=True)
class RdmpParams:
    """Fitted primitive: basis weights plus attractor and timing constants.

    weights has shape (n_dims, n_basis); centers are strictly increasing in
    [0, 2*pi); tau is seconds per radian of phase, so one period lasts
    2*pi*tau seconds.  goal_shift is the per-period goal advance in meters.
    """

    weights: np.ndarray
    centers: np.ndarray
    widths: np.ndarray
    amplitude: float
    tau: float
    alpha_z: float
    beta_z: float
    goal: np.ndarray
    goal_shift: np.ndarray
    alpha_g: float = ALPHA_G

    def __post_init__(self):
        if self.weights.ndim != 2 or self.weights.shape[1] < 2:
            raise ValueError("need a (n_dims, n_basis) weight matrix with n_basis >= 2")
        if self.tau <= 0 or self.alpha_z <= 0 or self.beta_z <= 0:
            raise ValueError("tau, alpha_z, beta_z must be positive")
        if np.any(self.widths <= 0):
            raise ValueError("basis widths must be positive")
        c = self.centers
        if np.any(c < 0) or np.any(c >= 2 * np.pi) or np.any(np.diff(c) <= 0):
            raise ValueError("centers must be strictly increasing within [0, 2*pi)")

    @property
    def n_dims(self):
        return self.weights.shape[0]

    @property
    def n_basis(self):
        return self.weights.shape[1]

    @property
    def period(self):
        return 2.0 * np.pi * self.tau

    def default_dt(self):
        return self.period / STEPS_PER_PERIOD


@dataclass
class RdmpState:
    """Integration state: position, scaled velocity, phase, relaxed goal."""

    x: np.ndarray
    z: np.ndarray
    phi: float
    g_cur: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled positions; duration is counted as len(points) * dt."""

    dt: float
    points: np.ndarray  # (n, n_dims)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.points.ndim != 2 or len(self.points) < 1:
            raise ValueError("points must be a non-empty (n, n_dims) array")

    def __len__(self):
        return len(self.points)

    @property
    def duration(self):
        return len(self.points) * self.dt

    @property
    def times(self):
        return np.arange(len(self.points)) * self.dt


def evenly_spaced_centers(n_basis):
    return np.linspace(0.0, 2.0 * np.pi, n_basis, endpoint=False)


def basis_activation(phi, params):
    """Cyclic basis values exp(h_i * (cos(phi - c_i) - 1)), each in (0, 1]."""
    return np.exp(params.widths * (np.cos(phi - params.centers) - 1.0))


def forcing(phi, params):
    """Normalized basis-weighted force, scaled by the amplitude parameter."""
    psi = basis_activation(phi, params)
    return (params.weights @ psi) / psi.sum() * params.amplitude


def _goal_target(params, phi):
    # period index from phase; epsilon guards accumulated float drift
    return params.goal + np.floor(phi / (2.0 * np.pi) + 1e-9) * params.goal_shift


def step(state, params, dt):
    """One explicit-Euler update of the transformation and canonical systems.

    dt must be positive and at most tau/10 (integration stability guard).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt > params.tau / 10.0:
        raise ValueError(f"dt={dt} too large for tau={params.tau} (limit tau/10)")
    f = forcing(state.phi, params)
    target = _goal_target(params, state.phi)
    g_new = state.g_cur + dt * params.alpha_g * (target - state.g_cur) / params.tau
    z_new = state.z + dt * (
        params.alpha_z * (params.beta_z * (state.g_cur - state.x) - state.z) + f
    ) / params.tau
    x_new = state.x + dt * state.z / params.tau
    return RdmpState(x=x_new, z=z_new, phi=state.phi + dt / params.tau, g_cur=g_new)


def initial_state(params, x0=None, v0=None):
    """State at phase 0; velocity v0 (m/s) is stored as scaled velocity z."""
    x0 = params.goal.copy() if x0 is None else np.asarray(x0, float).copy()
    z0 = np.zeros(params.n_dims) if v0 is None else np.asarray(v0, float) * params.tau
    return RdmpState(x=x0, z=z0, phi=0.0, g_cur=params.goal.copy())


def _finite_difference(values, dt):
    # central differences, one-sided at the ends
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (2.0 * dt)
    d[0] = (values[1] - values[0]) / dt
    d[-1] = (values[-1] - values[-2]) / dt
    return d


def fit_from_demo(demo, n_basis=DEFAULT_N_BASIS, period=None):
    """Fit weights to a demonstrated trajectory by locally weighted regression.

    The goal is set to the per-dimension mean of the demo.  The required
    forcing is recovered from the attractor equation using finite-difference
    derivatives, then each basis weight is the activation-weighted average of
    that target, which the normalized forcing model reproduces.

    The demo must span at least one full period (len * dt >= period).
    """
    if period is None or period <= 0:
        raise ValueError("period must be a positive number of seconds")
    pts = np.asarray(demo.points, float)
    if len(pts) * demo.dt < period - 1e-9:
        raise ValueError("demo shorter than one period")
    tau = period / (2.0 * np.pi)
    goal = pts.mean(axis=0)

    if len(pts) < 3:
        vel = np.zeros_like(pts)
        acc = np.zeros_like(pts)
    else:
        vel = _finite_difference(pts, demo.dt)
        acc = _finite_difference(vel, demo.dt)
    # Eq. of motion rearranged for f, per dimension
    z = tau * vel
    zdot = tau * acc
    f_target = tau * zdot - ALPHA_Z * (BETA_Z * (goal - pts) - z)

    centers = evenly_spaced_centers(n_basis)
    widths = np.full(n_basis, WIDTH_FACTOR * n_basis)
    phis = np.arange(len(pts)) * (demo.dt / tau)
    psi = np.exp(widths * (np.cos(phis[:, None] - centers[None, :]) - 1.0))  # (T, n_basis)
    denom = psi.sum(axis=0) + 1e-10
    weights = (psi.T @ f_target / denom[:, None]).T  # (n_dims, n_basis)

    return RdmpParams(
        weights=weights,
        centers=centers,
        widths=widths,
        amplitude=1.0,
        tau=tau,
        alpha_z=ALPHA_Z,
        beta_z=BETA_Z,
        goal=goal,
        goal_shift=np.zeros(pts.shape[1]),
    )


def waypoint_trajectory(waypoints, period, dt=None):
    """Densify waypoints into one period by natural cubic interpolation.

    Waypoints are placed at equal time spacing over [0, period]; samples
    cover [0, period) so consecutive periods tile seamlessly when the goal
    shifts by (last - first) per period.
    """
    wp = np.asarray(waypoints, float)
    if wp.ndim != 2 or len(wp) < 3:
        raise ValueError("need at least 3 waypoints")
    if period <= 0:
        raise ValueError("period must be positive")
    if dt is None:
        dt = period / STEPS_PER_PERIOD
    knots = np.linspace(0.0, period, len(wp))
    spline = CubicSpline(knots, wp, axis=0, bc_type="natural")
    times = np.arange(0.0, period - dt / 2.0, dt)
    return Trajectory(dt=dt, points=spline(times))


def from_waypoints(waypoints, period, n_basis=DEFAULT_N_BASIS):
    """Fit a primitive to cubic-smoothed waypoints of a single period.

    The per-period goal shift is set to (last waypoint - first waypoint).
    """
    wp = np.asarray(waypoints, float)
    dense = waypoint_trajectory(wp, period)
    params = fit_from_demo(dense, n_basis=n_basis, period=period)
    return replace(params, goal_shift=wp[-1] - wp[0])


def rollout(params, n_periods, dt=None, init=None):
    """Integrate for n_periods full phase revolutions from ``init``.

    Returns a Trajectory whose first point is the initial position; with
    n_periods = 0 that single point is the whole result.
    """
    if n_periods < 0:
        raise ValueError("n_periods must be >= 0")
    if dt is None:
        dt = params.default_dt()
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt > params.tau / 10.0:
        raise ValueError(f"dt={dt} too large for tau={params.tau} (limit tau/10)")
    if init is None:
        init = initial_state(params)
    steps_per_period = max(1, int(round(params.period / dt)))
    n_steps = int(n_periods) * steps_per_period
    points = kernels.rollout_core(
        np.ascontiguousarray(params.weights, dtype=np.float64),
        np.ascontiguousarray(params.centers, dtype=np.float64),
        np.ascontiguousarray(params.widths, dtype=np.float64),
        float(params.amplitude),
        float(params.tau),
        float(params.alpha_z),
        float(params.beta_z),
        float(params.alpha_g),
        np.ascontiguousarray(params.goal, dtype=np.float64),
        np.ascontiguousarray(params.goal_shift, dtype=np.float64),
        np.ascontiguousarray(init.x, dtype=np.float64),
        np.ascontiguousarray(init.z, dtype=np.float64),
        float(init.phi),
        np.ascontiguousarray(init.g_cur, dtype=np.float64),
        float(dt),
        n_steps,
    )
    return Trajectory(dt=dt, points=points)


def rescale(params, speed_factor=1.0, amplitude_factor=1.0):
    """Run-time retiming/rescaling: tau /= speed, amplitude *= factor."""
    if speed_factor <= 0 or amplitude_factor <= 0:
        raise ValueError("factors must be positive")
    return replace(
        params,
        tau=params.tau / speed_factor,
        amplitude=params.amplitude * amplitude_factor,
    )
