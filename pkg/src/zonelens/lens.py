"""Gradient-index lens synthesis for a multi-radar beam-forming sphere.

The lens is a sphere whose relative permittivity falls off radially from the
center, overlaid with a half-ring of straight dielectric rods lying in the
Y-Z plane.  Each rod is split into three axial segments of constant
permittivity (feed end, core, radiation end), and the voxel value is the
maximum of the radial base profile, every rod contribution, and a global
floor.  The result is exported as an ASCII voxel list for fabrication /
full-wave import, and as 2D cross-sections for inspection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, ResourceError

VACUUM_EPS = 1.0  # sentinel for voxels outside the sphere; never exported


@dataclass(frozen=True)
class LensConfig:
    """Geometry and material parameters of the synthesized lens."""

    radius_mm: float = 50.0
    eps_min: float = 1.38
    base_offset: float = 0.8
    base_span: float = 1.2
    rod_radius_mm: float = 7.5
    seg_eps: tuple[float, float, float] = (1.5, 2.0, 1.75)
    seg_bounds: tuple[float, float] = (-0.34, 0.34)
    n_rods: int = 13
    theta_range_deg: tuple[float, float] = (-90.0, 90.0)
    step_mm: float = 2.0
    voxel_budget: int = 100_000_000

    def __post_init__(self):
        if self.radius_mm <= 0:
            raise ConfigError("lens radius must be positive")
        if not 0 < self.rod_radius_mm < self.radius_mm:
            raise ConfigError("rod radius must lie in (0, lens radius)")
        if self.eps_min < 1:
            raise ConfigError("permittivity floor below vacuum")
        if self.step_mm <= 0 or self.step_mm > self.radius_mm / 5:
            raise ConfigError("voxel step must be positive and <= radius/5")
        lo, hi = self.seg_bounds
        if not (-1 < lo < hi < 1):
            raise ConfigError("segment bounds must be increasing inside (-1, 1)")
        if any(e < self.eps_min for e in self.seg_eps):
            raise ConfigError("rod segment permittivities must be >= eps_min")
        # n_rods == 0 is the rod-free base profile; a single rod cannot be
        # "uniformly spaced" over a closed interval.
        if self.n_rods == 1 or self.n_rods < 0:
            raise ConfigError("n_rods must be 0 (no rods) or >= 2")
        if self.theta_range_deg[0] >= self.theta_range_deg[1]:
            raise ConfigError("theta range must be increasing")


@dataclass(frozen=True)
class RodSpec:
    """One rod axis: a unit vector in the Y-Z plane at angle theta from +z."""

    direction: np.ndarray
    theta_deg: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        object.__setattr__(self, "direction", d)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ConfigError("rod direction must be a unit vector")
        if d[0] != 0.0:
            raise ConfigError("rod axes lie in the Y-Z plane (x component zero)")


@dataclass
class PermittivityField:
    """Voxelized relative permittivity on a regular grid, cell-center sampled.

    ``origin`` is the minimum corner of the grid in mm; voxel (i, j, k) is
    centered at origin + (i+0.5, j+0.5, k+0.5) * step.  Voxels outside the
    lens sphere hold ``VACUUM_EPS``.
    """

    origin: np.ndarray
    step_mm: float
    dims: tuple[int, int, int]
    values: np.ndarray
    lens_radius_mm: float

    def axis_coords(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis, in mm."""
        return self.origin[axis] + (np.arange(self.dims[axis]) + 0.5) * self.step_mm

    def center_grids(self):
        """Broadcastable (X, Y, Z) center-coordinate arrays."""
        cx, cy, cz = (self.axis_coords(a) for a in range(3))
        return (
            cx[:, None, None],
            cy[None, :, None],
            cz[None, None, :],
        )

    def in_sphere(self) -> np.ndarray:
        """Boolean mask of voxels whose centers satisfy |p| <= lens radius."""
        x, y, z = self.center_grids()
        return x * x + y * y + z * z <= self.lens_radius_mm**2


def classical_index(r: float, radius: float) -> float:
    """Classical Luneburg refractive index sqrt(2 - (r/R)^2).

    Valid for 0 <= r <= R; the corresponding permittivity is n^2.
    """
    if not 0 <= r <= radius:
        raise DomainError(f"r={r} outside [0, {radius}]")
    return math.sqrt(2.0 - (r / radius) ** 2)


def base_grin_eps(p, cfg: LensConfig) -> float:
    """Radial base profile: offset + (1 - |p|^2/R^2) * span.

    Defined for any point; callers mask to the sphere.  Values below the
    floor are clipped later by the max-combination.
    """
    p = np.asarray(p, dtype=float)
    r2 = float(p @ p)
    return cfg.base_offset + (1.0 - r2 / cfg.radius_mm**2) * cfg.base_span


def rod_directions(cfg: LensConfig) -> list[RodSpec]:
    """Rod axes uniformly spaced over the closed angular range, endpoints included."""
    if cfg.n_rods == 0:
        return []
    if cfg.n_rods < 2:
        raise ConfigError("at least two rods are required for uniform spacing")
    lo, hi = cfg.theta_range_deg
    thetas = [lo + i * (hi - lo) / (cfg.n_rods - 1) for i in range(cfg.n_rods)]
    return [
        RodSpec(
            direction=np.array([0.0, math.sin(math.radians(t)), math.cos(math.radians(t))]),
            theta_deg=t,
        )
        for t in thetas
    ]


def rod_contribution(p, rod: RodSpec, cfg: LensConfig) -> float:
    """Piecewise-constant permittivity of one rod at point p, 0 off the rod.

    The point is projected onto the rod axis; within the tube radius the
    axial position selects the feed / core / radiation segment value.  The
    feed segment is closed at its upper bound, the others half-open below.
    """
    p = np.asarray(p, dtype=float)
    ell = float(p @ rod.direction)
    radius = cfg.radius_mm
    if ell < -radius or ell > radius:
        return 0.0
    perp = p - ell * rod.direction
    if float(perp @ perp) >= cfg.rod_radius_mm**2:
        return 0.0
    b_lo = cfg.seg_bounds[0] * radius
    b_hi = cfg.seg_bounds[1] * radius
    if ell <= b_lo:
        return cfg.seg_eps[0]
    if ell <= b_hi:
        return cfg.seg_eps[1]
    return cfg.seg_eps[2]


def point_eps(p, cfg: LensConfig, rods: list[RodSpec] | None = None) -> float:
    """Modified-lens permittivity at one point: max(floor, base, rods).

    Reference scalar evaluation; `synthesize_field` computes the same value
    for every voxel center vectorized.
    """
    if rods is None:
        rods = rod_directions(cfg)
    best = max(cfg.eps_min, base_grin_eps(p, cfg))
    for rod in rods:
        best = max(best, rod_contribution(p, rod, cfg))
    return best


def _grid_geometry(cfg: LensConfig):
    """Odd per-axis voxel counts with a cell center exactly at the origin."""
    n_half = int(math.floor(cfg.radius_mm / cfg.step_mm))
    dim = 2 * n_half + 1
    origin = -(n_half + 0.5) * cfg.step_mm
    return (dim, dim, dim), np.array([origin, origin, origin])


def synthesize_field(cfg: LensConfig) -> PermittivityField:
    """Build the full voxel field for the configured lens.

    Every in-sphere voxel gets max(eps_min, base profile, best rod
    contribution); out-of-sphere voxels carry the vacuum sentinel.
    """
    dims, origin = _grid_geometry(cfg)
    n_voxels = dims[0] * dims[1] * dims[2]
    if n_voxels > cfg.voxel_budget:
        raise ResourceError(
            f"grid of {n_voxels} voxels exceeds budget {cfg.voxel_budget}"
        )

    centers = [origin[a] + (np.arange(dims[a]) + 0.5) * cfg.step_mm for a in range(3)]
    x = centers[0][:, None, None]
    y = centers[1][None, :, None]
    z = centers[2][None, None, :]
    r2 = x * x + y * y + z * z
    radius2 = cfg.radius_mm**2

    best = np.maximum(cfg.eps_min, cfg.base_offset + (1.0 - r2 / radius2) * cfg.base_span)
    tube2 = cfg.rod_radius_mm**2
    b_lo = cfg.seg_bounds[0] * cfg.radius_mm
    b_hi = cfg.seg_bounds[1] * cfg.radius_mm
    for rod in rod_directions(cfg):
        vx, vy, vz = rod.direction
        ell = x * vx + y * vy + z * vz
        perp2 = r2 - ell * ell
        in_tube = (perp2 < tube2) & (ell >= -cfg.radius_mm) & (ell <= cfg.radius_mm)
        psi = np.zeros(dims)
        psi[in_tube & (ell <= b_lo)] = cfg.seg_eps[0]
        psi[in_tube & (ell > b_lo) & (ell <= b_hi)] = cfg.seg_eps[1]
        psi[in_tube & (ell > b_hi)] = cfg.seg_eps[2]
        np.maximum(best, psi, out=best)

    return PermittivityField(
        origin=origin,
        step_mm=cfg.step_mm,
        dims=dims,
        values=np.where(r2 <= radius2, best, VACUUM_EPS),
        lens_radius_mm=cfg.radius_mm,
    )


def export_ascii(field: PermittivityField, path) -> int:
    """Write one `x y z eps` line per in-sphere voxel; returns the line count.

    Fixed 6-decimal notation, space separated, x varying fastest, then y,
    then z, no header.  Out-of-sphere voxels are never emitted.
    """
    x, y, z = field.center_grids()
    mask = field.in_sphere()
    # z-major ordering with x fastest: transpose to (z, y, x) before flattening
    order = (2, 1, 0)
    cols = np.column_stack(
        [
            np.broadcast_to(g, field.dims).transpose(order)[mask.transpose(order)]
            for g in (x, y, z)
        ]
        + [field.values.transpose(order)[mask.transpose(order)]]
    )
    try:
        with open(path, "w", newline="\n") as fh:
            np.savetxt(fh, cols, fmt="%.6f", delimiter=" ", newline="\n")
    except OSError as exc:
        raise OSError(f"failed writing lens export to {path}: {exc}") from exc
    return cols.shape[0]


def read_ascii(path) -> np.ndarray:
    """Parse an exported voxel list back into an (n, 4) array of x y z eps."""
    data = np.loadtxt(path, dtype=float, ndmin=2)
    if data.size == 0:
        return np.empty((0, 4))
    if data.shape[1] != 4:
        raise DomainError(f"expected 4 columns in {path}, got {data.shape[1]}")
    return data


_PLANES = {
    "x0": (0, 1, 2),  # sliced axis, row axis, column axis
    "y0": (1, 0, 2),
    "z0": (2, 0, 1),
}


@dataclass
class CrossSection:
    """A 2D permittivity slice with its axis labels and coordinates."""

    plane: str
    row_axis: str
    col_axis: str
    row_coords: np.ndarray
    col_coords: np.ndarray
    values: np.ndarray


def cross_section(field: PermittivityField, plane: str) -> CrossSection:
    """Extract the voxel slice nearest one of the coordinate planes.

    ``plane`` is one of ``x0`` (Y-Z slice), ``y0`` (X-Z slice), ``z0``
    (X-Y slice).  Rows follow the first remaining axis, columns the second.
    """
    key = plane.lower().replace("=", "")
    if key not in _PLANES:
        raise DomainError(f"unknown plane {plane!r}; expected one of x0, y0, z0")
    sliced, row_ax, col_ax = _PLANES[key]
    coords = field.axis_coords(sliced)
    if not coords.min() - field.step_mm / 2 <= 0 <= coords.max() + field.step_mm / 2:
        raise DomainError(f"plane {plane} does not intersect the grid")
    idx = int(np.argmin(np.abs(coords)))
    values = np.take(field.values, idx, axis=sliced)
    names = "xyz"
    return CrossSection(
        plane=key,
        row_axis=names[row_ax],
        col_axis=names[col_ax],
        row_coords=field.axis_coords(row_ax),
        col_coords=field.axis_coords(col_ax),
        values=values,
    )


def write_cross_section_csv(section: CrossSection, path) -> None:
    """CSV with column coordinates in the header row, row coordinates first."""
    try:
        with open(path, "w", newline="\n") as fh:
            header = [f"{section.row_axis}\\{section.col_axis}"] + [
                f"{c:.6f}" for c in section.col_coords
            ]
            fh.write(",".join(header) + "\n")
            for r, row in zip(section.row_coords, section.values):
                fh.write(",".join([f"{r:.6f}"] + [f"{v:.6f}" for v in row]) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing slice CSV to {path}: {exc}") from exc
