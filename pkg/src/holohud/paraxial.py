"""Paraxial object/image design of the holographic combiner.

All lengths are in whatever unit the caller uses consistently (the design
tables use cm); angles are in degrees at this interface. The relation between
object distance ``p``, virtual-image distance ``q`` and focal length ``f`` is
``1/p - 1/q = 1/f`` with all three positive for a magnified virtual image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, DomainError


def _positive(**kwargs):
    for name, value in kwargs.items():
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f"{name} must be positive and finite, got {value!r}")


def _non_negative(**kwargs):
    for name, value in kwargs.items():
        if not (value >= 0 and math.isfinite(value)):
            raise DomainError(f"{name} must be non-negative and finite, got {value!r}")


@dataclass(frozen=True)
class SystemGeometry:
    """Fixed layout shared by every wavelength channel.

    ``p`` is diffuser to HOE, ``d`` eye to HOE, ``aperture_*`` the HOE size and
    ``diffuser_*`` the projected image size on the diffuser.
    """

    p: float
    d: float
    aperture_w: float
    aperture_h: float
    diffuser_w: float
    diffuser_h: float

    def __post_init__(self):
        _positive(p=self.p, d=self.d, aperture_w=self.aperture_w, aperture_h=self.aperture_h,
                  diffuser_w=self.diffuser_w, diffuser_h=self.diffuser_h)

    def scaled(self, factor: float) -> "SystemGeometry":
        return SystemGeometry(*(v * factor for v in (self.p, self.d, self.aperture_w,
                                                     self.aperture_h, self.diffuser_w,
                                                     self.diffuser_h)))


@dataclass(frozen=True)
class WavelengthChannel:
    """One colour channel: recording/replay wavelengths [nm] and image distance."""

    name: str
    lambda_record: float
    lambda_replay: float
    q: float

    def __post_init__(self):
        for label, lam in (("lambda_record", self.lambda_record),
                           ("lambda_replay", self.lambda_replay)):
            if not 100 < lam < 10000:
                raise DomainError(f"{self.name}: {label} must lie in (100, 10000) nm, got {lam}")
        _positive(q=self.q)

    @property
    def detuning_nm(self) -> float:
        return self.lambda_replay - self.lambda_record


@dataclass(frozen=True)
class ImagingSolution:
    name: str
    q: float
    f: float
    M: float
    x2_w: float
    x2_h: float
    fov_w: float
    fov_h: float
    eb_w: float
    eb_h: float
    eb_alt_w: float
    eb_alt_h: float

    @property
    def has_eyebox(self) -> bool:
        """False when either eye-box axis came out negative."""
        return self.eb_w > 0 and self.eb_h > 0


def solve_focal(p: float, q: float) -> float:
    """Focal length for object distance ``p`` and virtual-image distance ``q``."""
    _positive(p=p, q=q)
    if q == p:
        raise DegenerateError("q = p gives 1/f = 0 (infinite focal length)")
    return p * q / (q - p)


def solve_image_distance(p: float, f: float) -> float:
    """Virtual-image distance for object distance ``p`` and focal length ``f > p``."""
    _positive(p=p, f=f)
    if f <= p:
        raise DomainError(f"f = {f} <= p = {p}: no magnified virtual image")
    return p * f / (f - p)


def magnification(p: float, q: float) -> float:
    _positive(p=p, q=q)
    return q / p


def virtual_image_size(M: float, x1: float) -> float:
    _positive(M=M, x1=x1)
    return M * x1


def fov(x2: float, q: float, d: float) -> float:
    """Full field of view [deg] of an image of size ``x2`` seen from ``d`` in front of the HOE."""
    _non_negative(x2=x2, d=d)
    _positive(q=q)
    return math.degrees(2 * math.atan(x2 / (2 * (q + d))))


def eyebox_from_fov(a: float, fov_deg: float, d: float) -> float:
    """Eye-box ``a - 2 tan(fov/2) d``; may be negative (no eye-box)."""
    _positive(a=a)
    _non_negative(d=d)
    if not 0 <= fov_deg < 180:
        raise DomainError(f"fov must lie in [0, 180) degrees, got {fov_deg}")
    return a - 2 * math.tan(math.radians(fov_deg) / 2) * d


def eyebox_similar_triangles(a: float, x2: float, q: float, d: float) -> float:
    """Eye-box ``a - (x2 - a) d / q`` from the image/HOE/eye triangles."""
    _positive(a=a, x2=x2, q=q)
    _non_negative(d=d)
    return a - (x2 - a) * d / q


def solve_channel(geometry: SystemGeometry, channel: WavelengthChannel) -> ImagingSolution:
    p, d = geometry.p, geometry.d
    f = solve_focal(p, channel.q)
    M = magnification(p, channel.q)
    x2_w = virtual_image_size(M, geometry.diffuser_w)
    x2_h = virtual_image_size(M, geometry.diffuser_h)
    fov_w = fov(x2_w, channel.q, d)
    fov_h = fov(x2_h, channel.q, d)
    return ImagingSolution(
        name=channel.name, q=channel.q, f=f, M=M, x2_w=x2_w, x2_h=x2_h,
        fov_w=fov_w, fov_h=fov_h,
        eb_w=eyebox_from_fov(geometry.aperture_w, fov_w, d),
        eb_h=eyebox_from_fov(geometry.aperture_h, fov_h, d),
        eb_alt_w=eyebox_similar_triangles(geometry.aperture_w, x2_w, channel.q, d),
        eb_alt_h=eyebox_similar_triangles(geometry.aperture_h, x2_h, channel.q, d),
    )


@dataclass(frozen=True)
class TradeoffRow:
    x1: float
    fov: float
    eb: float


def tradeoff_sweep(geometry: SystemGeometry, channel: WavelengthChannel, axis: str = "w",
                   n: int = 20) -> list[TradeoffRow]:
    """FOV and eye-box as the loaded image shrinks from the full diffuser size.

    Rows are ordered by increasing image size, hence increasing FOV.
    """
    if axis not in ("w", "h"):
        raise DomainError("axis must be 'w' or 'h'")
    full = geometry.diffuser_w if axis == "w" else geometry.diffuser_h
    a = geometry.aperture_w if axis == "w" else geometry.aperture_h
    M = magnification(geometry.p, channel.q)
    rows = []
    for x1 in np.linspace(full / n, full, n):
        angle = fov(M * x1, channel.q, geometry.d)
        rows.append(TradeoffRow(float(x1), angle, eyebox_from_fov(a, angle, geometry.d)))
    return rows


@dataclass
class DesignReport:
    geometry: SystemGeometry
    solutions: list[ImagingSolution]
    tradeoffs: dict[str, list[TradeoffRow]] = field(default_factory=dict)

    def to_text(self, unit: str = "cm") -> str:
        g = self.geometry
        lines = [
            f"p = {g.p:g} {unit}, d = {g.d:g} {unit}, HOE {g.aperture_w:g}x{g.aperture_h:g} {unit}, "
            f"diffuser image {g.diffuser_w:g}x{g.diffuser_h:g} {unit}",
            "",
            f"{'channel':>8} {'q':>9} {'f':>9} {'M':>8} {'x2_w':>9} {'x2_h':>9} {'fov_w':>7} "
            f"{'fov_h':>7} {'eb_w':>8} {'eb_h':>8} {'eb5_w':>8} {'eb5_h':>8}",
        ]
        for s in self.solutions:
            flag = "" if s.has_eyebox else "  (no eye-box)"
            lines.append(
                f"{s.name:>8} {s.q:9.2f} {s.f:9.2f} {s.M:8.3f} {s.x2_w:9.2f} {s.x2_h:9.2f} "
                f"{s.fov_w:7.2f} {s.fov_h:7.2f} {s.eb_w:8.2f} {s.eb_h:8.2f} "
                f"{s.eb_alt_w:8.2f} {s.eb_alt_h:8.2f}{flag}"
            )
        lines += ["", "fov in degrees; eb from a - 2 tan(fov/2) d, eb5 from a - (x2 - a) d / q"]
        return "\n".join(lines) + "\n"


def design_report(geometry: SystemGeometry, channels, sweep_points: int = 20) -> DesignReport:
    """Solve every channel and sweep the loaded-image size for each."""
    channels = list(channels)
    if not channels:
        raise DomainError("at least one channel is required")
    report = DesignReport(geometry, [solve_channel(geometry, c) for c in channels])
    if sweep_points:
        for c in channels:
            report.tradeoffs[c.name] = tradeoff_sweep(geometry, c, "w", sweep_points)
    return report


TABLE1_GEOMETRY = SystemGeometry(p=30.0, d=50.0, aperture_w=20.0, aperture_h=15.0,
                                 diffuser_w=10.0, diffuser_h=10.0)

TABLE_CHANNELS = (
    WavelengthChannel("red", 639.0, 636.0, 150.0),
    WavelengthChannel("green", 532.0, 528.0, 500.0),
    WavelengthChannel("blue", 457.0, 449.0, 1000.0),
)
