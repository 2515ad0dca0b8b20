"""Vectorized numpy ray-bundle integrator (fallback for the compiled kernel).

Integrates the arc-length GRIN ray equation d/ds(n dr/ds) = grad n with
classical RK4 on the state (position, n * direction).  All rays of a bundle
advance in lockstep; the sphere-boundary crossing is located by bisecting
the final RK4 step.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericalError

_OUTSIDE_TOL = 1e-12


def _rk4(medium, pos, mom, h):
    """One RK4 step of size h (h may be a per-ray vector)."""
    h = np.asarray(h, dtype=float).reshape(-1, 1)

    def deriv(p, t):
        eps, geps = medium.sample_many(p)
        n = np.sqrt(eps)[:, None]
        return t / n, geps / (2.0 * n)

    k1p, k1t = deriv(pos, mom)
    k2p, k2t = deriv(pos + 0.5 * h * k1p, mom + 0.5 * h * k1t)
    k3p, k3t = deriv(pos + 0.5 * h * k2p, mom + 0.5 * h * k2t)
    k4p, k4t = deriv(pos + h * k3p, mom + h * k3t)
    new_pos = pos + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    new_mom = mom + h / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t)
    return new_pos, new_mom


def trace_batch(medium, start_pos, start_dir, step, max_length, bisect_tol=1e-3):
    """Trace rays until they leave the bounding sphere or exceed max_length.

    Returns (exit_pos, exit_dir, exit_len, trapped); trapped rays keep their
    last integrated state.
    """
    pos = np.array(start_pos, dtype=float)
    dirs = np.array(start_dir, dtype=float)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    n_rays = pos.shape[0]
    length = np.zeros(n_rays)
    radius = medium.radius
    r2lim = radius * radius

    exit_pos = pos.copy()
    exit_dir = dirs.copy()
    exit_len = np.zeros(n_rays)
    trapped = np.zeros(n_rays, dtype=bool)
    active = np.ones(n_rays, dtype=bool)

    # advance outside starts straight to the sphere; rays that miss exit at once
    r2 = np.einsum("ij,ij->i", pos, pos)
    outside = r2 > r2lim * (1.0 + _OUTSIDE_TOL)
    if outside.any():
        b = np.einsum("ij,ij->i", pos, dirs)
        disc = b * b - (r2 - r2lim)
        hits = outside & (disc >= 0.0)
        t_in = np.where(hits, -b - np.sqrt(np.maximum(disc, 0.0)), -1.0)
        enters = hits & (t_in >= 0.0)
        pos[enters] += t_in[enters, None] * dirs[enters]
        length[enters] = t_in[enters]
        misses = outside & ~enters
        active[misses] = False  # exit state stays at the start

    eps0, _ = medium.sample_many(pos)
    mom = np.sqrt(eps0)[:, None] * dirs

    max_steps = int(np.ceil(max_length / step)) + 2
    for _ in range(max_steps):
        idx = np.flatnonzero(active & (length < max_length))
        if idx.size == 0:
            break
        p0 = pos[idx]
        t0 = mom[idx]
        # fold magnitude renormalization into this step's first evaluation
        eps, _ = medium.sample_many(p0)
        n = np.sqrt(eps)[:, None]
        t0 = t0 * (n / np.linalg.norm(t0, axis=1, keepdims=True))
        p1, t1 = _rk4(medium, p0, t0, step)
        if not (np.isfinite(p1).all() and np.isfinite(t1).all()):
            bad = idx[~(np.isfinite(p1).all(axis=1) & np.isfinite(t1).all(axis=1))][0]
            raise NumericalError(
                "non-finite ray state during integration",
                last_sample=(pos[bad].copy(), mom[bad].copy(), float(length[bad])),
            )
        u1 = t1 / np.linalg.norm(t1, axis=1, keepdims=True)
        r2 = np.einsum("ij,ij->i", p1, p1)
        crossing = (r2 > r2lim) & (np.einsum("ij,ij->i", p1, u1) > 0.0)

        stay = ~crossing
        sidx = idx[stay]
        pos[sidx] = p1[stay]
        mom[sidx] = t1[stay]
        length[sidx] += step

        if crossing.any():
            cidx = idx[crossing]
            cp0 = p0[crossing]
            ct0 = t0[crossing]
            lo = np.zeros(cidx.size)
            hi = np.full(cidx.size, float(step))
            for _ in range(60):
                if (hi - lo).max() <= bisect_tol:
                    break
                mid = 0.5 * (lo + hi)
                pm, _ = _rk4(medium, cp0, ct0, mid)
                inside = np.einsum("ij,ij->i", pm, pm) <= r2lim
                lo = np.where(inside, mid, lo)
                hi = np.where(inside, hi, mid)
            sig = 0.5 * (lo + hi)
            pe, te = _rk4(medium, cp0, ct0, sig)
            exit_pos[cidx] = pe
            exit_dir[cidx] = te / np.linalg.norm(te, axis=1, keepdims=True)
            exit_len[cidx] = length[cidx] + sig
            active[cidx] = False

    still = np.flatnonzero(active & (length >= max_length))
    trapped[still] = True
    exit_pos[still] = pos[still]
    exit_dir[still] = mom[still] / np.linalg.norm(mom[still], axis=1, keepdims=True)
    exit_len[still] = length[still]
    return exit_pos, exit_dir, exit_len, trapped
