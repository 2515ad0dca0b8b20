"""GRIN ray tracing: single rays with full paths, bundles with beam stats.

Bundle tracing dispatches to a compiled kernel when the extension built,
falling back to the vectorized numpy integrator otherwise.  Set
ZONELENS_PURE_PYTHON=1 to force the fallback (used by the benchmark).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateBeamError, NumericalError
from . import _pycore
from .media import LuneburgProfile, VoxelMedium, as_medium, sample_eps

try:
    from . import _ckernel
except ImportError:  # pure-source tree or failed build
    _ckernel = None

DEFAULT_STEP_MM = 0.1
BISECT_TOL_MM = 1e-3

__all__ = [
    "RayState",
    "RayPath",
    "BeamStats",
    "LuneburgProfile",
    "VoxelMedium",
    "sample_eps",
    "as_medium",
    "trace_ray",
    "trace_bundle",
    "beam_metrics",
    "cone_directions",
    "sector_feed",
    "active_backend",
    "compiled_available",
]


def compiled_available() -> bool:
    return _ckernel is not None


def active_backend(backend: str | None = None) -> str:
    """Resolve which integrator to use: 'compiled' or 'python'."""
    if backend in ("compiled", "python"):
        return backend
    if backend is not None:
        raise ValueError(f"unknown backend {backend!r}")
    if os.environ.get("ZONELENS_PURE_PYTHON", "") not in ("", "0"):
        return "python"
    return "compiled" if _ckernel is not None else "python"


@dataclass(frozen=True)
class RayState:
    position: np.ndarray
    direction: np.ndarray
    path_length: float = 0.0


@dataclass
class RayPath:
    samples: list[RayState] = field(default_factory=list)
    exit_state: RayState | None = None
    trapped: bool = False


@dataclass(frozen=True)
class BeamStats:
    mean_exit_direction: np.ndarray
    angular_spread_rms_deg: float
    trapped_fraction: float
    n_rays: int


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def trace_ray(medium, start: RayState, step: float = DEFAULT_STEP_MM,
              max_length: float | None = None, record_path: bool = True) -> RayPath:
    """Trace one ray, recording a sample per integration step.

    The ray is advanced straight to the sphere if it starts outside, then
    integrated until it leaves the sphere moving outward (exit located by
    bisection to 1e-3 mm) or accumulates max_length of path (trapped).
    """
    medium = as_medium(medium)
    radius = medium.radius
    if max_length is None:
        max_length = 20.0 * radius
    r2lim = radius * radius

    p = np.array(start.position, dtype=float)
    u = _unit(start.direction)
    length = float(start.path_length)
    path = RayPath()

    def record(pp, uu, ll):
        if record_path:
            path.samples.append(RayState(pp.copy(), uu.copy(), ll))

    record(p, u, length)

    r2 = float(p @ p)
    if r2 > r2lim * (1 + 1e-12):
        b = float(p @ u)
        disc = b * b - (r2 - r2lim)
        t_in = -b - math.sqrt(disc) if disc >= 0 else -1.0
        if t_in < 0:
            path.exit_state = RayState(p, u, length)
            return path
        p = p + t_in * u
        length += t_in
        record(p, u, length)

    eps, _ = medium.sample(p)
    mom = math.sqrt(eps) * u

    def rk4(p0, t0, h):
        def deriv(pp, tt):
            e, g = medium.sample(pp)
            n = math.sqrt(e)
            return tt / n, g / (2.0 * n)

        k1p, k1t = deriv(p0, t0)
        k2p, k2t = deriv(p0 + 0.5 * h * k1p, t0 + 0.5 * h * k1t)
        k3p, k3t = deriv(p0 + 0.5 * h * k2p, t0 + 0.5 * h * k2t)
        k4p, k4t = deriv(p0 + h * k3p, t0 + h * k3t)
        return (p0 + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p),
                t0 + h / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t))

    while length < max_length:
        eps, _ = medium.sample(p)
        mom = mom * (math.sqrt(eps) / np.linalg.norm(mom))
        p0, t0 = p, mom
        p1, t1 = rk4(p0, t0, step)
        if not (np.isfinite(p1).all() and np.isfinite(t1).all()):
            raise NumericalError("non-finite ray state during integration",
                                 last_sample=RayState(p, _unit(mom), length))
        u1 = _unit(t1)
        if float(p1 @ p1) > r2lim and float(p1 @ u1) > 0:
            lo, hi = 0.0, step
            while hi - lo > BISECT_TOL_MM:
                mid = 0.5 * (lo + hi)
                pm, _ = rk4(p0, t0, mid)
                if float(pm @ pm) <= r2lim:
                    lo = mid
                else:
                    hi = mid
            sig = 0.5 * (lo + hi)
            pe, te = rk4(p0, t0, sig)
            ue = _unit(te)
            length += sig
            record(pe, ue, length)
            path.exit_state = RayState(pe, ue, length)
            return path
        p, mom = p1, t1
        length += step
        record(p, u1, length)

    path.trapped = True
    path.exit_state = None
    return path


def cone_directions(axis, half_angle_deg: float, n_rays: int) -> np.ndarray:
    """Deterministic spiral covering of a cone of directions.

    Ray 0 is exactly the axis; the rest spread area-uniformly in the polar
    cosine with golden-angle azimuths, reaching the cone edge.
    """
    axis = _unit(axis)
    if n_rays < 1:
        raise ValueError("n_rays must be >= 1")
    # orthonormal frame around the axis
    helper = np.array([1.0, 0.0, 0.0])
    if abs(axis @ helper) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    e1 = _unit(np.cross(axis, helper))
    e2 = np.cross(axis, e1)
    cos_edge = math.cos(math.radians(half_angle_deg))
    golden = math.pi * (3.0 - math.sqrt(5.0))
    dirs = np.empty((n_rays, 3))
    for i in range(n_rays):
        frac = i / (n_rays - 1) if n_rays > 1 else 0.0
        c = 1.0 - (1.0 - cos_edge) * frac
        s = math.sqrt(max(0.0, 1.0 - c * c))
        phi = i * golden
        dirs[i] = c * axis + s * (math.cos(phi) * e1 + math.sin(phi) * e2)
    return dirs


def sector_feed(radius_mm: float, theta_deg: float):
    """Feed position and boresight for a sector at angle theta in the Y-Z plane.

    The feed sits on the sphere at the opposite end of the rod axis and
    launches toward the center, so the beam should emerge along +v(theta).
    """
    t = math.radians(theta_deg)
    v = np.array([0.0, math.sin(t), math.cos(t)])
    return -radius_mm * v, v


def _trace_exits(medium, start_pos, start_dir, step, max_length, backend):
    medium = as_medium(medium)
    if active_backend(backend) == "compiled":
        grid, origin, gstep = medium.kernel_args()
        return _ckernel.trace_batch(
            medium.kernel_mode, medium.radius, grid,
            origin[0], origin[1], origin[2], gstep,
            np.ascontiguousarray(start_pos, dtype=float),
            np.ascontiguousarray(start_dir, dtype=float),
            step, max_length, BISECT_TOL_MM,
        )
    return _pycore.trace_batch(medium, start_pos, start_dir, step, max_length,
                               BISECT_TOL_MM)


def trace_bundle(medium, feed_position, cone_half_angle_deg: float, n_rays: int,
                 step: float = DEFAULT_STEP_MM, max_length: float | None = None,
                 backend: str | None = None, return_exits: bool = False):
    """Launch a cone of rays from a feed toward the sphere center.

    Returns BeamStats; with return_exits=True also the raw
    (exit_pos, exit_dir, exit_len, trapped) arrays.
    """
    medium = as_medium(medium)
    if max_length is None:
        max_length = 20.0 * medium.radius
    feed = np.asarray(feed_position, dtype=float)
    axis = _unit(-feed)
    dirs = cone_directions(axis, cone_half_angle_deg, n_rays)
    pos = np.tile(feed, (n_rays, 1))
    exits = _trace_exits(medium, pos, dirs, step, max_length, backend)
    stats = _stats_from_exits(exits[1], exits[3])
    if return_exits:
        return stats, exits
    return stats


def _stats_from_exits(exit_dirs, trapped):
    ok = ~np.asarray(trapped)
    n_total = len(trapped)
    if not ok.any():
        raise DegenerateBeamError("all rays trapped; no beam statistics")
    d = np.asarray(exit_dirs)[ok]
    mean = _unit(d.sum(axis=0))
    cosang = np.clip(d @ mean, -1.0, 1.0)
    angles = np.degrees(np.arccos(cosang))
    return BeamStats(
        mean_exit_direction=mean,
        angular_spread_rms_deg=float(np.sqrt(np.mean(angles**2))),
        trapped_fraction=float(np.count_nonzero(~ok) / n_total),
        n_rays=n_total,
    )


def beam_metrics(paths: list[RayPath]) -> BeamStats:
    """Aggregate exit directions of traced paths into beam statistics."""
    if not paths:
        raise DegenerateBeamError("no rays")
    dirs = []
    trapped = []
    for p in paths:
        trapped.append(p.trapped or p.exit_state is None)
        dirs.append(p.exit_state.direction if p.exit_state is not None else np.zeros(3))
    return _stats_from_exits(np.array(dirs), np.array(trapped))
