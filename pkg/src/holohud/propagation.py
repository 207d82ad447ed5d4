"""Scalar free-space propagation between parallel planes.

Two routes are provided:

* :func:`propagate_direct` evaluates the Kirchhoff integral as a midpoint sum
  over the sample grid, ``E = 1/(j lambda) sum A exp(jkr)/r dxi deta``. It costs
  O(N^4) and exists as an oracle for small grids.
* :func:`propagate_asm` multiplies the spatial spectrum by the exact
  transfer function ``exp(j z sqrt(k^2 - 4 pi^2 (fx^2 + fy^2)))``, with
  2x zero padding and the band limit of Matsushima & Shimobaba (2009).

Arrays are indexed ``data[ix, iy]``: axis 0 is x, axis 1 is y (y fastest in
row-major memory). Sample ``i`` sits at ``(i - n // 2) * pitch``, so an
on-axis sample exists for every grid size.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft

from .errors import DomainError, SamplingError

#: Fraction of spectral energy allowed outside the occupied band when
#: estimating how far a field's spectrum extends.
BAND_TAIL_FRACTION = 1e-2


@dataclass(frozen=True)
class ComplexField:
    """Sampled complex amplitude on a uniform grid.

    Parameters
    ----------
    data : ndarray, shape (nx, ny)
        Complex amplitudes, ``data[ix, iy]``.
    pitch_x, pitch_y : float
        Sample spacing [m].
    wavelength : float
        Vacuum wavelength [m].
    """

    data: np.ndarray = field(repr=False)
    pitch_x: float
    pitch_y: float
    wavelength: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2 or min(data.shape) < 2:
            raise DomainError(f"field must be 2-D with at least 2 samples per axis, got {data.shape}")
        if not (self.pitch_x > 0 and self.pitch_y > 0):
            raise DomainError("pitches must be positive")
        if not self.wavelength > 0:
            raise DomainError("wavelength must be positive")
        if not np.all(np.isfinite(data)):
            raise DomainError("field contains non-finite amplitudes")
        object.__setattr__(self, "data", data)

    @property
    def nx(self) -> int:
        return self.data.shape[0]

    @property
    def ny(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.data) ** 2

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Return 1-D x and y sample coordinates [m]."""
        return grid_coords(self.nx, self.pitch_x), grid_coords(self.ny, self.pitch_y)

    def with_data(self, data) -> "ComplexField":
        return replace(self, data=data)


def grid_coords(n: int, pitch: float) -> np.ndarray:
    return (np.arange(n) - n // 2) * pitch


def plane_wave(nx, ny, pitch, wavelength, amplitude=1.0) -> ComplexField:
    return ComplexField(np.full((nx, ny), amplitude, dtype=np.complex128), pitch, pitch, wavelength)


def energy(field: ComplexField) -> float:
    """Sum of ``|a|^2 dx dy`` over the grid."""
    return float(np.sum(field.intensity) * field.pitch_x * field.pitch_y)


def relative_l2(a, b) -> float:
    """``||a - b|| / ||b||`` for arrays or fields."""
    a = a.data if isinstance(a, ComplexField) else np.asarray(a)
    b = b.data if isinstance(b, ComplexField) else np.asarray(b)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


@dataclass(frozen=True)
class SamplingDiagnostics:
    """Outcome of :func:`validate_sampling`.

    ``max_local_fringe_frequency`` is the field's occupied bandwidth expressed
    against the grid Nyquist frequency: it equals the occupied bandwidth when
    the transfer function is sampled finely enough everywhere up to Nyquist,
    and is scaled up by ``nyquist / band_limit`` once the transfer-function
    phase aliases below Nyquist. Hence ``ok`` iff it does not exceed
    ``nyquist_frequency``.
    """

    max_local_fringe_frequency: float
    nyquist_frequency: float
    evanescent_energy_fraction: float
    ok: bool
    occupied_frequency: tuple[float, float] = (0.0, 0.0)
    band_limit: tuple[float, float] = (np.inf, np.inf)
    z: float = 0.0

    def summary(self) -> str:
        return (
            f"z={self.z:.6g} m: fringe {self.max_local_fringe_frequency:.6g} /m vs Nyquist "
            f"{self.nyquist_frequency:.6g} /m, occupied band {self.occupied_frequency[0]:.6g}, "
            f"{self.occupied_frequency[1]:.6g} /m, transfer-function limit "
            f"{self.band_limit[0]:.6g}, {self.band_limit[1]:.6g} /m, "
            f"evanescent fraction {self.evanescent_energy_fraction:.3g}, ok={self.ok}"
        )


def band_limit_frequency(wavelength, z, window) -> float:
    """Highest frequency at which the transfer-function phase is alias-free.

    Sampling the transfer function at ``1/window`` keeps adjacent samples
    within pi of each other up to ``1 / (lambda sqrt((2 z / window)^2 + 1))``;
    equivalently the impulse response stays inside half the window.
    """
    if z == 0:
        return np.inf
    return 1.0 / (wavelength * np.sqrt((2.0 * z / window) ** 2 + 1.0))


def _occupied_band(power_1d: np.ndarray, freqs: np.ndarray, tail: float) -> float:
    total = power_1d.sum()
    if total <= 0:
        return 0.0
    mags = np.abs(freqs)
    order = np.argsort(mags)[::-1]
    tail_energy = np.cumsum(power_1d[order])
    # smallest |f| with everything strictly above it below the tail budget
    above = np.concatenate(([0.0], tail_energy[:-1]))
    keep = above <= tail * total
    idx = np.nonzero(keep)[0][-1]
    return float(mags[order][idx])


def validate_sampling(field: ComplexField, z: float, *, pad: bool = True,
                      tail: float = BAND_TAIL_FRACTION) -> SamplingDiagnostics:
    """Check that ``field`` can be propagated by ``z`` without aliasing.

    The occupied bandwidth per axis is the smallest frequency beyond which at
    most ``tail`` of the spectral energy lies. It is compared with both the
    grid Nyquist frequency and the transfer-function band limit for the
    padded window (``pad=True``); a periodic window has no band limit.
    """
    spec = np.abs(scipy.fft.fft2(field.data)) ** 2
    fx = scipy.fft.fftfreq(field.nx, field.pitch_x)
    fy = scipy.fft.fftfreq(field.ny, field.pitch_y)
    occ_x = _occupied_band(spec.sum(axis=1), fx, tail)
    occ_y = _occupied_band(spec.sum(axis=0), fy, tail)

    if pad:
        lim_x = band_limit_frequency(field.wavelength, z, 2 * field.nx * field.pitch_x)
        lim_y = band_limit_frequency(field.wavelength, z, 2 * field.ny * field.pitch_y)
    else:
        # periodic window: the sampled transfer function is exact at every DFT frequency
        lim_x = lim_y = np.inf
    nyq_x = 0.5 / field.pitch_x
    nyq_y = 0.5 / field.pitch_y
    use = max(occ_x / min(nyq_x, lim_x), occ_y / min(nyq_y, lim_y))
    nyquist = 0.5 / max(field.pitch_x, field.pitch_y)

    total = spec.sum()
    fsq = fx[:, None] ** 2 + fy[None, :] ** 2
    evan = float(spec[fsq > field.wavelength ** -2].sum() / total) if total > 0 else 0.0

    fringe = use * nyquist
    return SamplingDiagnostics(
        max_local_fringe_frequency=fringe,
        nyquist_frequency=nyquist,
        evanescent_energy_fraction=evan,
        ok=bool(fringe <= nyquist),
        occupied_frequency=(occ_x, occ_y),
        band_limit=(lim_x, lim_y),
        z=float(z),
    )


def transfer_function(shape, pitch_x, pitch_y, wavelength, z, *, window=None,
                      band_limit=True) -> np.ndarray:
    """Angular-spectrum transfer function on an FFT-ordered frequency grid.

    Evanescent components decay for ``z > 0`` and are zeroed for ``z < 0``.
    ``window`` is the physical extent (wx, wy) used for the band limit and
    defaults to the grid extent.
    """
    nx, ny = shape
    fx = scipy.fft.fftfreq(nx, pitch_x)[:, None]
    fy = scipy.fft.fftfreq(ny, pitch_y)[None, :]
    arg = wavelength ** -2 - fx ** 2 - fy ** 2
    prop = arg > 0
    root = 2 * np.pi * np.sqrt(np.abs(arg))
    h = np.where(prop, np.exp(1j * z * root), 0)
    if z > 0:
        h = np.where(prop, h, np.exp(-z * root))
    if band_limit:
        wx, wy = window if window is not None else (nx * pitch_x, ny * pitch_y)
        h = h * ((np.abs(fx) <= band_limit_frequency(wavelength, z, wx))
                 & (np.abs(fy) <= band_limit_frequency(wavelength, z, wy)))
    return h


def propagate_asm(field: ComplexField, z: float, *, pad: bool = True,
                  band_limit: bool | None = None, override_sampling: bool = False,
                  workers: int | None = None) -> ComplexField:
    """Propagate by signed distance ``z`` [m] with the angular spectrum method.

    With ``pad=True`` each axis is zero padded to twice its length so the
    result is a linear (not circular) convolution; the output is cropped back
    to the input grid, and the transfer function is band limited. With
    ``pad=False`` the window is one period of a periodic field: the transfer
    function sampled on the DFT frequencies is then exact, no band limit is
    applied by default, and the step is unitary on the propagating band and
    shift covariant.

    Raises
    ------
    SamplingError
        If :func:`validate_sampling` fails and ``override_sampling`` is false.
    """
    if z == 0:
        return field.with_data(field.data.copy())
    if band_limit is None:
        band_limit = pad
    diag = validate_sampling(field, z, pad=pad)
    if not diag.ok and not override_sampling:
        raise SamplingError(f"propagation by {z:g} m aliases: {diag.summary()}", diag)
    if z < 0 and diag.evanescent_energy_fraction > 0:
        warnings.warn(f"dropping evanescent energy fraction {diag.evanescent_energy_fraction:.3g} "
                      "in backward propagation", RuntimeWarning, stacklevel=2)

    nx, ny = field.shape
    if pad:
        shape = (2 * nx, 2 * ny)
        buf = np.zeros(shape, dtype=np.complex128)
        buf[:nx, :ny] = field.data
    else:
        shape = (nx, ny)
        buf = field.data
    window = (shape[0] * field.pitch_x, shape[1] * field.pitch_y)
    h = transfer_function(shape, field.pitch_x, field.pitch_y, field.wavelength, z,
                          window=window, band_limit=band_limit)
    spec = scipy.fft.fft2(buf, workers=workers)
    spec *= h
    out = scipy.fft.ifft2(spec, workers=workers)
    return field.with_data(out[:nx, :ny])


def kirchhoff_kernel(field: ComplexField, z: float) -> np.ndarray:
    """``exp(jkr) / (j lambda r)`` on every sample offset, conjugated for z < 0.

    Returned with shape ``(2 nx - 1, 2 ny - 1)``; offset (0, 0) sits at
    ``[nx - 1, ny - 1]``.
    """
    nx, ny = field.shape
    dx = np.arange(-(nx - 1), nx)[:, None] * field.pitch_x
    dy = np.arange(-(ny - 1), ny)[None, :] * field.pitch_y
    r = np.sqrt(dx ** 2 + dy ** 2 + z ** 2)
    kern = np.exp(1j * field.k * r) / (1j * field.wavelength * r)
    return np.conj(kern) if z < 0 else kern


def propagate_direct(field: ComplexField, z: float) -> ComplexField:
    """Brute-force Kirchhoff sum on the input grid (O(N^4), oracle use only).

    The constant is fixed to ``1/(j lambda)`` and the obliquity factor is
    dropped. Backward propagation uses the conjugate kernel.
    """
    if z == 0:
        warnings.warn("propagate_direct called with z = 0; returning the input", RuntimeWarning,
                      stacklevel=2)
        return field.with_data(field.data.copy())
    nx, ny = field.shape
    kern = kirchhoff_kernel(field, z) * (field.pitch_x * field.pitch_y)
    out = np.zeros((nx, ny), dtype=np.complex128)
    src = field.data
    for m, n in zip(*np.nonzero(src)):
        out += src[m, n] * kern[nx - 1 - m:2 * nx - 1 - m, ny - 1 - n:2 * ny - 1 - n]
    return field.with_data(out)


def band_limited_field(nx, ny, pitch, wavelength, *, band=0.3, envelope=0.1, seed=0) -> ComplexField:
    """Random complex test field with a compact spectrum and a Gaussian envelope.

    The spectrum is confined to ``|f| < band / 2`` in units of the sampling
    rate, and the amplitude falls off as a Gaussian of RMS width ``envelope``
    times the window, so the field stays clear of the grid edges under short
    propagation.
    """
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(nx, ny)) + 1j * rng.normal(size=(nx, ny))
    spec = np.fft.fft2(a)
    fx = np.fft.fftfreq(nx)[:, None]
    fy = np.fft.fftfreq(ny)[None, :]
    spec[(np.abs(fx) > band / 2) | (np.abs(fy) > band / 2)] = 0
    a = np.fft.ifft2(spec)
    x = (np.arange(nx) - nx // 2) / nx
    y = (np.arange(ny) - ny // 2) / ny
    a *= np.exp(-(x[:, None] ** 2 + y[None, :] ** 2) / (2 * envelope ** 2))
    return ComplexField(a, pitch, pitch, wavelength)
