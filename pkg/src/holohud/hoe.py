"""Phase screen of a holographic lens element.

The element imparts ``phi = -k sqrt(x^2 + y^2 + r0^2) + k x sin(theta)``: a
spherical wave converging to a point at ``r0`` plus the linear carrier left by
an off-axis reference beam tilted by ``theta`` about the y axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SamplingError
from .paraxial import solve_focal
from .propagation import ComplexField, grid_coords


@dataclass(frozen=True)
class HoeSpec:
    """Holographic lens: convergence distance ``r0`` [m], carrier tilt ``theta`` [rad],
    hard rectangular aperture [m] and design wavelength [m]."""

    r0: float
    theta: float
    aperture_w: float
    aperture_h: float
    wavelength: float

    def __post_init__(self):
        if not self.r0 > 0:
            raise DomainError("r0 must be positive")
        if not abs(self.theta) < math.pi / 2:
            raise DomainError("|theta| must be below pi/2")
        if not (self.aperture_w > 0 and self.aperture_h > 0):
            raise DomainError("aperture must be positive")
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    @classmethod
    def for_image_distance(cls, p, q, wavelength, aperture_w, aperture_h, theta=0.0):
        """Element that images an object at ``p`` to a virtual image at ``q``."""
        return cls(solve_focal(p, q), theta, aperture_w, aperture_h, wavelength)


def _grid(nx, ny, pitch):
    px, py = (pitch, pitch) if np.isscalar(pitch) else pitch
    return grid_coords(nx, px)[:, None], grid_coords(ny, py)[None, :], px, py


def aperture_mask(nx, ny, pitch, width, height) -> np.ndarray:
    x, y, px, py = _grid(nx, ny, pitch)
    # half-sample slack so an aperture equal to the grid extent keeps every sample
    return (np.abs(x) <= width / 2 + 1e-9 * px) & (np.abs(y) <= height / 2 + 1e-9 * py)


def local_frequency(spec: HoeSpec, nx, ny, pitch) -> tuple[float, float]:
    """Largest |d phi / dx| / 2 pi and |d phi / dy| / 2 pi inside the aperture [1/m]."""
    x, y, px, py = _grid(nx, ny, pitch)
    inside = aperture_mask(nx, ny, pitch, spec.aperture_w, spec.aperture_h)
    if not inside.any():
        return 0.0, 0.0
    R = np.sqrt(x ** 2 + y ** 2 + spec.r0 ** 2)
    gx = np.abs(-x / R + math.sin(spec.theta)) / spec.wavelength
    gy = np.abs(-y / R) / spec.wavelength
    return float(np.broadcast_to(gx, inside.shape)[inside].max()), \
        float(np.broadcast_to(gy, inside.shape)[inside].max())


def check_sampling(spec: HoeSpec, nx, ny, pitch) -> dict:
    """Compare the aperture's largest fringe frequency to the grid Nyquist limit."""
    _, _, px, py = _grid(nx, ny, pitch)
    fx, fy = local_frequency(spec, nx, ny, pitch)
    diag = {"max_fringe_x": fx, "max_fringe_y": fy,
            "nyquist_x": 0.5 / px, "nyquist_y": 0.5 / py}
    diag["ok"] = fx <= diag["nyquist_x"] and fy <= diag["nyquist_y"]
    return diag


def phase_profile(spec: HoeSpec, nx: int, ny: int, pitch, *, piston: bool = True,
                  override_sampling: bool = False) -> np.ndarray:
    """Phase map [rad] of shape (nx, ny) on a grid centred on the optical axis.

    With ``piston=False`` the constant ``-k r0`` is removed in a cancellation
    free form, which keeps full precision near the axis.

    Raises
    ------
    SamplingError
        If the fringe frequency inside the aperture exceeds Nyquist.
    """
    diag = check_sampling(spec, nx, ny, pitch)
    if not diag["ok"] and not override_sampling:
        raise SamplingError(
            f"HOE fringes reach ({diag['max_fringe_x']:.4g}, {diag['max_fringe_y']:.4g}) /m, "
            f"above Nyquist ({diag['nyquist_x']:.4g}, {diag['nyquist_y']:.4g}) /m", diag)
    x, y, _, _ = _grid(nx, ny, pitch)
    k = spec.k
    rho2 = x ** 2 + y ** 2
    tilt = k * x * math.sin(spec.theta)
    if piston:
        phi = -k * np.sqrt(rho2 + spec.r0 ** 2) + tilt
    else:
        phi = -k * rho2 / (np.sqrt(rho2 + spec.r0 ** 2) + spec.r0) + tilt
    return np.broadcast_to(phi, (nx, ny)).copy()


def equivalent_thin_lens(r0: float, wavelength: float, nx: int, ny: int, pitch) -> np.ndarray:
    """Paraxial lens phase ``-k (x^2 + y^2) / (2 r0)``."""
    x, y, _, _ = _grid(nx, ny, pitch)
    k = 2 * math.pi / wavelength
    return np.broadcast_to(-k * (x ** 2 + y ** 2) / (2 * r0), (nx, ny)).copy()


def quartic_bound(r0: float, wavelength: float, nx: int, ny: int, pitch) -> np.ndarray:
    """Pointwise bound ``k rho^4 / (8 r0^3)`` on the exact-minus-paraxial phase."""
    x, y, _, _ = _grid(nx, ny, pitch)
    k = 2 * math.pi / wavelength
    return np.broadcast_to(k * (x ** 2 + y ** 2) ** 2 / (8 * r0 ** 3), (nx, ny)).copy()


def apply(field: ComplexField, spec: HoeSpec, *, phase=None, allow_wavelength_mismatch=False,
          override_sampling=False, conjugate=False) -> ComplexField:
    """Multiply ``field`` by ``exp(j phi)`` inside the aperture and zero it outside.

    ``phase`` may be a precomputed :func:`phase_profile` map. ``conjugate``
    applies ``exp(-j phi)``, which undoes a previous application.
    """
    if not allow_wavelength_mismatch and not math.isclose(field.wavelength, spec.wavelength,
                                                          rel_tol=1e-9):
        raise DomainError(f"field wavelength {field.wavelength:g} m differs from the HOE design "
                          f"wavelength {spec.wavelength:g} m")
    pitch = (field.pitch_x, field.pitch_y)
    if phase is None:
        phase = phase_profile(spec, field.nx, field.ny, pitch, override_sampling=override_sampling)
    elif phase.shape != field.shape:
        raise DomainError(f"phase map shape {phase.shape} does not match field {field.shape}")
    mask = aperture_mask(field.nx, field.ny, pitch, spec.aperture_w, spec.aperture_h)
    sign = -1 if conjugate else 1
    return field.with_data(np.where(mask, field.data * np.exp(sign * 1j * phase), 0))
