"""Hot numeric inner loops.

Every kernel exists in a single pure-Python/numpy form; when numba is
available (and not disabled) the exported name is the ``@njit``-compiled
version.  Set ``PERISKILL_NUMBA=0`` to force the pure-numpy fallback.
``benchmarks/bench_kernels.py`` compares the two paths.
"""

import math
import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and os.environ.get("PERISKILL_NUMBA", "1") not in (
    "0",
    "false",
    "off",
)

TWO_PI = 2.0 * math.pi


def rollout_core(
    weights,
    centers,
    widths,
    amplitude,
    tau,
    alpha_z,
    beta_z,
    alpha_g,
    goal,
    goal_shift,
    x0,
    z0,
    phi0,
    g0,
    dt,
    n_steps,
):
    """Explicit-Euler integration of the rhythmic transformation system.

    State per output dimension: position x, scaled velocity z, relaxed goal g.
    The goal target advances by goal_shift once per full phase revolution;
    g itself is relaxed toward it by a first-order filter so it never jumps.
    Returns positions of shape (n_steps + 1, n_dims).
    """
    n_dims, n_basis = weights.shape
    out = np.empty((n_steps + 1, n_dims))
    x = x0.copy()
    z = z0.copy()
    g = g0.copy()
    phi = phi0
    for d in range(n_dims):
        out[0, d] = x[d]
    force = np.empty(n_dims)
    for k in range(n_steps):
        psi_sum = 0.0
        for d in range(n_dims):
            force[d] = 0.0
        for i in range(n_basis):
            psi = math.exp(widths[i] * (math.cos(phi - centers[i]) - 1.0))
            psi_sum += psi
            for d in range(n_dims):
                force[d] += psi * weights[d, i]
        # 1e-9 guards float drift of phi at exact period boundaries
        period_idx = math.floor(phi / TWO_PI + 1e-9)
        for d in range(n_dims):
            f = force[d] / psi_sum * amplitude
            target = goal[d] + period_idx * goal_shift[d]
            g_new = g[d] + dt * alpha_g * (target - g[d]) / tau
            z_new = z[d] + dt * (alpha_z * (beta_z * (g[d] - x[d]) - z[d]) + f) / tau
            x_new = x[d] + dt * z[d] / tau
            g[d] = g_new
            z[d] = z_new
            x[d] = x_new
            out[k + 1, d] = x[d]
        phi += dt / tau
    return out


def rope_step_core(
    nodes,
    anchor,
    ee,
    rest,
    pull,
    spool,
    spool_radius,
    n_iters,
    lo,
    hi,
):
    """One position-based-dynamics solve for a pinned rope chain.

    nodes is mutated in place.  Node 0 is hard-pinned to ``anchor``; the
    last node is soft-pulled toward ``ee`` each iteration.  A final forward
    sweep re-establishes exact link lengths, then nodes are pushed out of
    the spool disk and clamped to the box.
    """
    n = nodes.shape[0]
    for _ in range(n_iters):
        nodes[0, 0] = anchor[0]
        nodes[0, 1] = anchor[1]
        nodes[n - 1, 0] += pull * (ee[0] - nodes[n - 1, 0])
        nodes[n - 1, 1] += pull * (ee[1] - nodes[n - 1, 1])
        for i in range(n - 1):
            dx = nodes[i + 1, 0] - nodes[i, 0]
            dy = nodes[i + 1, 1] - nodes[i, 1]
            d = math.sqrt(dx * dx + dy * dy)
            if d < 1e-12:
                continue
            err = (d - rest) / d
            if i == 0:
                nodes[1, 0] -= dx * err
                nodes[1, 1] -= dy * err
            else:
                half = 0.5 * err
                nodes[i, 0] += dx * half
                nodes[i, 1] += dy * half
                nodes[i + 1, 0] -= dx * half
                nodes[i + 1, 1] -= dy * half
        for i in range(1, n):
            dx = nodes[i, 0] - spool[0]
            dy = nodes[i, 1] - spool[1]
            d = math.sqrt(dx * dx + dy * dy)
            if d < spool_radius and d > 1e-12:
                s = spool_radius / d
                nodes[i, 0] = spool[0] + dx * s
                nodes[i, 1] = spool[1] + dy * s
    # exact forward sweep keeps the +/-10% spacing contract regardless of
    # how far the effector dragged the free end this step
    nodes[0, 0] = anchor[0]
    nodes[0, 1] = anchor[1]
    for i in range(n - 1):
        dx = nodes[i + 1, 0] - nodes[i, 0]
        dy = nodes[i + 1, 1] - nodes[i, 1]
        d = math.sqrt(dx * dx + dy * dy)
        if d < 1e-12:
            nodes[i + 1, 0] = nodes[i, 0] + rest
            nodes[i + 1, 1] = nodes[i, 1]
        else:
            s = rest / d
            nodes[i + 1, 0] = nodes[i, 0] + dx * s
            nodes[i + 1, 1] = nodes[i, 1] + dy * s
    for i in range(n):
        if nodes[i, 0] < lo[0]:
            nodes[i, 0] = lo[0]
        elif nodes[i, 0] > hi[0]:
            nodes[i, 0] = hi[0]
        if nodes[i, 1] < lo[1]:
            nodes[i, 1] = lo[1]
        elif nodes[i, 1] > hi[1]:
            nodes[i, 1] = hi[1]


def granule_step_core(
    pos,
    vel,
    ee,
    ee_vel,
    ee_radius,
    granule_radius,
    damping,
    drag_gain,
    drag_band,
    dt,
    lo,
    hi,
    tray_center,
    tray_radius,
):
    """One damped-disk update: integrate, entrain, push out, separate pairs.

    Granules are confined to a circular tray.  A moving tool entrains
    nearby granules toward its own velocity (viscous drag) in addition to
    the hard push-out, so stirring circulates material instead of only
    compacting it.  pos and vel are mutated in place.
    """
    n = pos.shape[0]
    for i in range(n):
        vel[i, 0] *= damping
        vel[i, 1] *= damping
        pos[i, 0] += vel[i, 0] * dt
        pos[i, 1] += vel[i, 1] * dt
    min_d = ee_radius + granule_radius
    for i in range(n):
        dx = pos[i, 0] - ee[0]
        dy = pos[i, 1] - ee[1]
        d = math.sqrt(dx * dx + dy * dy)
        if d < min_d + drag_band:
            vel[i, 0] += drag_gain * (ee_vel[0] - vel[i, 0])
            vel[i, 1] += drag_gain * (ee_vel[1] - vel[i, 1])
        if d < min_d:
            if d < 1e-9:
                dx, dy, d = min_d, 0.0, min_d
            push = min_d - d
            pos[i, 0] += dx / d * push
            pos[i, 1] += dy / d * push
    two_r = 2.0 * granule_radius
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            d = math.sqrt(dx * dx + dy * dy)
            if d < two_r:
                if d < 1e-9:
                    dx, dy, d = two_r, 0.0, two_r
                corr = 0.5 * (two_r - d) / d
                pos[i, 0] -= dx * corr
                pos[i, 1] -= dy * corr
                pos[j, 0] += dx * corr
                pos[j, 1] += dy * corr
    r_max = tray_radius - granule_radius
    for i in range(n):
        dx = pos[i, 0] - tray_center[0]
        dy = pos[i, 1] - tray_center[1]
        d = math.sqrt(dx * dx + dy * dy)
        if d > r_max and d > 1e-12:
            s = r_max / d
            pos[i, 0] = tray_center[0] + dx * s
            pos[i, 1] = tray_center[1] + dy * s
            # drop the outward radial velocity component
            ux = dx / d
            uy = dy / d
            vr = vel[i, 0] * ux + vel[i, 1] * uy
            if vr > 0.0:
                vel[i, 0] -= vr * ux
                vel[i, 1] -= vr * uy
    for i in range(n):
        for a in range(2):
            if pos[i, a] < lo[a]:
                pos[i, a] = lo[a]
                vel[i, a] = 0.0
            elif pos[i, a] > hi[a]:
                pos[i, a] = hi[a]
                vel[i, a] = 0.0


# pure-numpy fallbacks stay importable under fixed names for the benchmark
rollout_core_py = rollout_core
rope_step_core_py = rope_step_core
granule_step_core_py = granule_step_core

if NUMBA_ENABLED:
    _jit = numba.njit(cache=True, fastmath=False)
    rollout_core = _jit(rollout_core)
    rope_step_core = _jit(rope_step_core)
    granule_step_core = _jit(granule_step_core)
