"""Angular-coverage and link-budget arithmetic for the five-zone array.

Closed-form sensitivity relations: the printed-cell upper frequency limit,
the angular half-width a torso subtends at a given distance, the closest
distance at which body extent bridges the gap between adjacent narrow
beams, far-field resolvable separation, and the two-way-gain range
extension factor of the radar equation.  Angles are handled in radians
internally and reported in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import SPEED_OF_LIGHT_M_S
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class CoverageConfig:
    n_zones: int = 5
    inter_beam_spacing_deg: float = 28.0
    hpbw_deg: float = 4.0
    torso_width_m: float = 0.50
    unit_cell_mm: float = 2.0
    host_eps: float = 2.8

    def __post_init__(self):
        if min(self.inter_beam_spacing_deg, self.hpbw_deg, self.torso_width_m,
               self.unit_cell_mm, self.host_eps) <= 0 or self.n_zones < 1:
            raise ConfigError("coverage parameters must be positive")
        if self.hpbw_deg >= self.inter_beam_spacing_deg:
            raise ConfigError("beamwidth must be narrower than the beam spacing")

    @property
    def gap_deg(self) -> float:
        """Angular gap between adjacent -3 dB beam edges."""
        return self.inter_beam_spacing_deg - self.hpbw_deg


def fmax_unit_cell(cell_mm: float, eps: float) -> float:
    """Upper usable frequency (GHz) of a printed cell: 1.4 c / (L sqrt(eps))."""
    if cell_mm <= 0:
        raise DomainError("unit cell size must be positive")
    if eps < 1:
        raise DomainError("host permittivity below vacuum")
    return 1.4 * SPEED_OF_LIGHT_M_S / (cell_mm * 1e-3 * math.sqrt(eps)) / 1e9


def torso_half_angle(width_m: float, distance_m: float) -> float:
    """Half-angle (degrees) subtended by a torso of given width at a distance."""
    if width_m <= 0:
        raise DomainError("torso width must be positive")
    if distance_m <= 0:
        raise DomainError("distance must be positive")
    return math.degrees(math.atan((width_m / 2.0) / distance_m))


def min_gapfree_distance(width_m: float, gap_deg: float) -> float:
    """Boundary distance of gap-free coverage: out to here the torso's
    angular width still spans the gap between adjacent beam edges."""
    if not 0 < gap_deg < 180:
        raise DomainError("gap must lie in (0, 180) degrees")
    if width_m <= 0:
        raise DomainError("torso width must be positive")
    return (width_m / 2.0) / math.tan(math.radians(gap_deg) / 2.0)


def resolvable_separation(distance_m: float, hpbw_deg: float) -> float:
    """Cross-range separation resolved by a beam of the given width."""
    if distance_m < 0:
        raise DomainError("distance must be non-negative")
    return distance_m * math.tan(math.radians(hpbw_deg))


def range_extension_factor(two_way_gain_db: float) -> float:
    """Detection-range multiplier from a two-way link-budget gain (R ~ budget^1/4)."""
    if not math.isfinite(two_way_gain_db):
        raise DomainError("gain must be finite")
    return 10.0 ** (two_way_gain_db / 40.0)


@dataclass(frozen=True)
class CoverageRow:
    distance_m: float
    half_angle_deg: float
    full_angle_deg: float
    gap_free: bool
    regime: str  # "body-limited" or "beam-limited"


@dataclass(frozen=True)
class CoverageReport:
    config: CoverageConfig
    rows: tuple[CoverageRow, ...]
    gap_deg: float
    min_gapfree_distance_m: float
    fmax_configured_ghz: float
    fmax_twice_cell_ghz: float
    notes: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "gap_deg": self.gap_deg,
            "min_gapfree_distance_m": self.min_gapfree_distance_m,
            "fmax_configured_ghz": self.fmax_configured_ghz,
            "fmax_twice_cell_ghz": self.fmax_twice_cell_ghz,
            "notes": list(self.notes),
            "rows": [
                {
                    "distance_m": r.distance_m,
                    "half_angle_deg": r.half_angle_deg,
                    "full_angle_deg": r.full_angle_deg,
                    "gap_free": r.gap_free,
                    "regime": r.regime,
                }
                for r in self.rows
            ],
        }


def coverage_report(cfg: CoverageConfig, distances_m) -> CoverageReport:
    """Per-distance coverage verdicts plus the derived design constants.

    A distance is gap-free when the full torso angle covers the inter-beam
    gap; the resolution regime flips from body- to beam-limited where the
    torso angle falls under the beamwidth.
    """
    rows = []
    for d in distances_m:
        alpha = torso_half_angle(cfg.torso_width_m, d)
        rows.append(
            CoverageRow(
                distance_m=d,
                half_angle_deg=alpha,
                full_angle_deg=2 * alpha,
                gap_free=2 * alpha >= cfg.gap_deg,
                regime="body-limited" if 2 * alpha >= cfg.hpbw_deg else "beam-limited",
            )
        )
    f_cfg = fmax_unit_cell(cfg.unit_cell_mm, cfg.host_eps)
    f_2x = fmax_unit_cell(2 * cfg.unit_cell_mm, cfg.host_eps)
    notes = (
        f"unit-cell frequency limit at L={cfg.unit_cell_mm:g} mm: {f_cfg:.2f} GHz",
        f"unit-cell frequency limit at an effective 2L={2 * cfg.unit_cell_mm:g} mm cell: "
        f"{f_2x:.2f} GHz (the 58-63 GHz band operates near this bound)",
    )
    return CoverageReport(
        config=cfg,
        rows=tuple(rows),
        gap_deg=cfg.gap_deg,
        min_gapfree_distance_m=min_gapfree_distance(cfg.torso_width_m, cfg.gap_deg),
        fmax_configured_ghz=f_cfg,
        fmax_twice_cell_ghz=f_2x,
        notes=notes,
    )
