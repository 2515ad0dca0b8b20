"""Refractive media for the GRIN ray tracer.

A medium answers permittivity and its spatial gradient at any point, plus
the radius of the bounding sphere used for entry/exit detection.  Two kinds
exist: the analytic classical Luneburg profile (exact gradient) and a
voxelized field sampled by trilinear interpolation (gradient by central
differences of the interpolant).
"""

from __future__ import annotations

import numpy as np

from ..lens import PermittivityField

# central-difference probe, as a fraction of the voxel step
GRAD_H_FRACTION = 0.25

# The analytic profile continues a short distance past the surface so RK4
# stages of a boundary-crossing step see a continuous medium; integration
# itself stops at the sphere.
SURFACE_MARGIN = 1.02


class LuneburgProfile:
    """eps(r) = 2 - (r/R)^2 inside the sphere, 1 in the far field.

    The formula extends smoothly to SURFACE_MARGIN * R (where eps is still
    close to 1) and reads as vacuum beyond; exact gradient everywhere.
    """

    kernel_mode = 0

    def __init__(self, radius_mm: float):
        self.radius = float(radius_mm)

    def sample(self, p):
        p = np.asarray(p, dtype=float)
        r2 = float(p @ p)
        if r2 > (SURFACE_MARGIN * self.radius) ** 2:
            return 1.0, np.zeros(3)
        return 2.0 - r2 / self.radius**2, -2.0 * p / self.radius**2

    def sample_many(self, pts):
        pts = np.asarray(pts, dtype=float)
        r2 = np.einsum("ij,ij->i", pts, pts)
        near = r2 <= (SURFACE_MARGIN * self.radius) ** 2
        eps = np.where(near, 2.0 - r2 / self.radius**2, 1.0)
        grad = np.where(near[:, None], -2.0 * pts / self.radius**2, 0.0)
        return eps, grad

    def kernel_args(self):
        dummy = np.ones((1, 1, 1))
        return dummy, np.zeros(3), 1.0


class VoxelMedium:
    """Trilinear interpolation over a voxel field, padded with vacuum.

    Points beyond the padded grid read (1.0, zero gradient).  The gradient
    probe spans a quarter voxel, which also smooths the rod-boundary steps
    the way a finite fabrication cell would.
    """

    kernel_mode = 1
    PAD = 2

    def __init__(self, field: PermittivityField):
        self.radius = float(field.lens_radius_mm)
        self.step = float(field.step_mm)
        pad = self.PAD
        self.grid = np.pad(field.values, pad, mode="constant", constant_values=1.0)
        self.grid = np.ascontiguousarray(self.grid, dtype=float)
        self.origin = np.asarray(field.origin, dtype=float) - pad * self.step
        self.grad_h = GRAD_H_FRACTION * self.step

    def _interp_many(self, pts):
        f = (pts - self.origin) / self.step - 0.5
        bad = ~np.isfinite(f).all(axis=1)
        f = np.nan_to_num(f, nan=0.0, posinf=0.0, neginf=0.0)
        n = np.array(self.grid.shape)
        i0 = np.floor(f).astype(np.int64)
        t = f - i0
        oob = bad | (i0 < 0).any(axis=1) | (i0 > n - 2).any(axis=1)
        i0 = np.clip(i0, 0, n - 2)
        ix, iy, iz = i0[:, 0], i0[:, 1], i0[:, 2]
        tx, ty, tz = t[:, 0], t[:, 1], t[:, 2]
        g = self.grid
        c00 = g[ix, iy, iz] * (1 - tx) + g[ix + 1, iy, iz] * tx
        c01 = g[ix, iy, iz + 1] * (1 - tx) + g[ix + 1, iy, iz + 1] * tx
        c10 = g[ix, iy + 1, iz] * (1 - tx) + g[ix + 1, iy + 1, iz] * tx
        c11 = g[ix, iy + 1, iz + 1] * (1 - tx) + g[ix + 1, iy + 1, iz + 1] * tx
        out = (c00 * (1 - ty) + c10 * ty) * (1 - tz) + (c01 * (1 - ty) + c11 * ty) * tz
        out[oob] = 1.0
        return out

    def sample_many(self, pts):
        pts = np.asarray(pts, dtype=float)
        eps = self._interp_many(pts)
        h = self.grad_h
        grad = np.empty_like(pts)
        for a in range(3):
            d = np.zeros(3)
            d[a] = h
            grad[:, a] = (self._interp_many(pts + d) - self._interp_many(pts - d)) / (2 * h)
        return eps, grad

    def sample(self, p):
        eps, grad = self.sample_many(np.asarray(p, dtype=float)[None, :])
        return float(eps[0]), grad[0]

    def kernel_args(self):
        return self.grid, self.origin, self.step


def as_medium(medium_or_field):
    """Accept a PermittivityField or an existing medium object."""
    if isinstance(medium_or_field, PermittivityField):
        return VoxelMedium(medium_or_field)
    return medium_or_field


def sample_eps(medium_or_field, p):
    """Permittivity and gradient at point p (mm); vacuum outside the grid."""
    return as_medium(medium_or_field).sample(p)
