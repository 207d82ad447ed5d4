"""Volume reflection gratings: Bragg mismatch, coupled-wave efficiency, stacking.

Efficiency follows Kogelnik's lossless reflection-grating solution,
``eta = 1 / (1 + (1 - xi^2/nu^2) / sinh^2(sqrt(nu^2 - xi^2)))``, written here
as ``nu^2 / (nu^2 + g(nu^2 - xi^2))`` with ``g(s2) = s2 / sinh^2(sqrt(s2))``,
which is real and smooth across ``xi = nu`` (``g(-t^2) = t^2 / sin^2 t``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateError, DomainError


@dataclass(frozen=True)
class GratingSpec:
    """Material and geometry of a volume grating (SI units, angles in radians).

    ``k_mag`` is the grating-vector magnitude, ``grating_tilt`` its angle from
    the surface normal, ``theta0`` the reference incidence angle used when
    recording. ``c_r`` and ``c_s`` are the obliquity factors of the reference
    and signal waves (``c_s < 0`` for a reflection grating).
    """

    k_mag: float
    grating_tilt: float
    theta0: float
    n0: float
    n1: float
    thickness: float
    c_r: float = 1.0
    c_s: float = -1.0

    def __post_init__(self):
        if not self.k_mag > 0:
            raise DomainError("k_mag must be positive")
        if not self.n0 >= 1:
            raise DomainError("n0 must be at least 1")
        if not 0 <= self.n1 < self.n0:
            raise DomainError("n1 must lie in [0, n0)")
        if not self.thickness > 0:
            raise DomainError("thickness must be positive")
        if self.c_r == 0 or self.c_s == 0:
            raise DomainError("obliquity factors must be non-zero")

    @classmethod
    def reflection(cls, wavelength_record, n0, n1, thickness, grating_tilt, theta0,
                   wavelength_replay=None):
        """Grating recorded at ``wavelength_record`` with Bragg-matched obliquity factors.

        The grating period follows from the Bragg condition at the recording
        angle, ``K = 2 beta cos(grating_tilt - theta0)`` with
        ``beta = 2 pi n0 / lambda``; obliquities are ``c_r = cos theta0`` and
        ``c_s = cos theta0 - K cos(grating_tilt) / beta`` at replay.
        """
        beta_rec = 2 * math.pi * n0 / wavelength_record
        k_mag = 2 * beta_rec * abs(math.cos(grating_tilt - theta0))
        beta = 2 * math.pi * n0 / (wavelength_replay or wavelength_record)
        c_r = math.cos(theta0)
        c_s = math.cos(theta0) - k_mag * math.cos(grating_tilt) / beta
        return cls(k_mag, grating_tilt, theta0, n0, n1, thickness, c_r, c_s)

    def nu(self, wavelength: float) -> float:
        """Coupling strength ``pi n1 d / (lambda sqrt|c_r c_s|)``."""
        return math.pi * self.n1 * self.thickness / (wavelength * math.sqrt(abs(self.c_r * self.c_s)))

    def n1_for_nu(self, nu: float, wavelength: float) -> float:
        return nu * wavelength * math.sqrt(abs(self.c_r * self.c_s)) / (math.pi * self.thickness)


@dataclass(frozen=True)
class Detuning:
    d_theta: float = 0.0
    d_lambda: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.d_theta) and math.isfinite(self.d_lambda)):
            raise DomainError("detuning must be finite")


@dataclass(frozen=True)
class LayerStack:
    t_glass: float
    t_layer: float
    n_layers: int

    def __post_init__(self):
        if not (0 <= self.t_glass <= 1 and 0 <= self.t_layer <= 1):
            raise DomainError("transmittances must lie in [0, 1]")
        if self.n_layers < 0 or int(self.n_layers) != self.n_layers:
            raise DomainError("n_layers must be a non-negative integer")


def bragg_mismatch(g: GratingSpec, det: Detuning) -> float:
    """Dephasing ``d_theta K sin(phi - theta0) - d_lambda K^2 / (4 pi n0)`` [rad/m]."""
    return (det.d_theta * g.k_mag * math.sin(g.grating_tilt - g.theta0)
            - det.d_lambda * g.k_mag ** 2 / (4 * math.pi * g.n0))


def compensating_angle(g: GratingSpec, d_lambda: float) -> float:
    """Angular offset [rad] that cancels the dephasing of a wavelength offset."""
    s = math.sin(g.grating_tilt - g.theta0)
    if abs(s) < 1e-15:
        raise DegenerateError("grating_tilt = theta0: no angular offset can compensate")
    return d_lambda * g.k_mag / (4 * math.pi * g.n0 * s)


def xi_from_delta(g: GratingSpec, delta: float) -> float:
    return delta * g.thickness / (2 * g.c_s)


def _g(s2):
    """``s2 / sinh^2(sqrt(s2))`` continued to ``s2 <= 0``; +inf at the zeros of sin."""
    s2 = np.asarray(s2, dtype=float)
    out = np.ones_like(s2)
    pos = s2 > 1e-12
    s = np.sqrt(s2[pos])
    # s / sinh s = 2 s e^-s / (1 - e^-2s), stable for large s
    out[pos] = (2 * s * np.exp(-s) / -np.expm1(-2 * s)) ** 2
    neg = s2 < -1e-12
    t = np.sqrt(-s2[neg])
    with np.errstate(divide="ignore"):
        out[neg] = t ** 2 / np.sin(t) ** 2
    small = ~(pos | neg)
    # series about 0: s2/sinh^2 = 1 - s2/3 + ...
    out[small] = 1 - s2[small] / 3
    return out


def reflection_efficiency(nu, xi):
    """Diffraction efficiency of a lossless reflection grating, in [0, 1].

    Accepts scalars or broadcastable arrays. ``nu = 0`` gives 0.
    """
    nu = np.asarray(nu, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if not (np.all(np.isfinite(nu)) and np.all(np.isfinite(xi))):
        raise DomainError("nu and xi must be finite")
    if np.any(nu < 0):
        raise DomainError("nu must be non-negative")
    nu, xi = np.broadcast_arrays(nu, xi)
    nu2 = nu ** 2
    g = _g(nu2 - xi ** 2)
    with np.errstate(invalid="ignore"):
        eta = np.where(np.isinf(g) | (nu2 == 0), 0.0, nu2 / (nu2 + g))
    eta = np.clip(eta, 0.0, 1.0)
    return float(eta) if eta.ndim == 0 else eta


def fit_modulation(eta_measured: float, xi: float = 0.0, *, tol: float = 1e-10) -> float:
    """Coupling strength ``nu`` that yields ``eta_measured`` at dephasing ``xi``.

    Solved by bracketed root finding; at ``xi = 0`` this inverts ``tanh^2``.
    """
    if not 0 <= eta_measured < 1:
        raise DomainError("eta_measured must lie in [0, 1)")
    if eta_measured == 0:
        return 0.0
    f = lambda nu: reflection_efficiency(nu, xi) - eta_measured  # noqa: E731
    hi = max(1.0, abs(xi))
    while f(hi) < 0:
        hi *= 2
        if hi > 1e4:
            raise DomainError(f"no coupling strength reaches eta = {eta_measured} at xi = {xi}")
    nu = brentq(f, 0.0, hi, xtol=1e-15, maxiter=500)
    if abs(f(nu)) > tol:
        raise DomainError(f"root finding did not converge: residual {f(nu):.3g}")
    return nu


@dataclass(frozen=True)
class ChannelEfficiency:
    name: str
    d_lambda: float
    delta: float
    xi: float
    eta: float


def grating_for_channel(channel, n0, thickness, grating_tilt, theta0, n1=0.0) -> GratingSpec:
    """Reflection grating recorded at the channel's recording wavelength [nm]."""
    return GratingSpec.reflection(channel.lambda_record * 1e-9, n0, n1, thickness, grating_tilt,
                                  theta0, channel.lambda_replay * 1e-9)


def channel_efficiency(channel, nu, n0, thickness, grating_tilt, theta0) -> ChannelEfficiency:
    g = grating_for_channel(channel, n0, thickness, grating_tilt, theta0)
    d_lambda = channel.detuning_nm * 1e-9
    delta = bragg_mismatch(g, Detuning(0.0, d_lambda))
    xi = xi_from_delta(g, delta)
    return ChannelEfficiency(channel.name, d_lambda, delta, xi, reflection_efficiency(nu, xi))


def replay_ranking(channels, *, nu, n0, thickness, grating_tilt, theta0) -> list[ChannelEfficiency]:
    """Per-channel efficiency under replay/record wavelength mismatch, best first.

    All channels share the coupling strength ``nu`` and the material
    parameters; only the wavelength offset and the grating period differ.
    """
    effs = [channel_efficiency(c, nu, n0, thickness, grating_tilt, theta0) for c in channels]
    return sorted(effs, key=lambda e: -e.eta)


def detuning_curve(g: GratingSpec, nu: float, *, d_lambdas=None, d_thetas=None):
    """Rows ``(offset, delta, xi, eta)`` over a wavelength or an angle sweep."""
    if (d_lambdas is None) == (d_thetas is None):
        raise DomainError("give exactly one of d_lambdas or d_thetas")
    rows = []
    if d_lambdas is not None:
        for dl in d_lambdas:
            delta = bragg_mismatch(g, Detuning(0.0, dl))
            xi = xi_from_delta(g, delta)
            rows.append((dl, delta, xi, reflection_efficiency(nu, xi)))
    else:
        for dt in d_thetas:
            delta = bragg_mismatch(g, Detuning(dt, 0.0))
            xi = xi_from_delta(g, delta)
            rows.append((dt, delta, xi, reflection_efficiency(nu, xi)))
    return rows


def transmittance_stack(stack: LayerStack) -> float:
    """Glass transmittance times one factor per holographic layer."""
    return stack.t_glass * stack.t_layer ** stack.n_layers


def with_nu(g: GratingSpec, nu: float, wavelength: float) -> GratingSpec:
    """Copy of ``g`` with ``n1`` set so that its coupling strength is ``nu``."""
    return replace(g, n1=g.n1_for_nu(nu, wavelength))


# fixture material for ordering studies; not measured values
REFERENCE_N0 = 1.5
REFERENCE_THICKNESS = 16e-6
# phi - theta0 = 45 deg; theta0 < 0 keeps c_s negative (reflection geometry)
REFERENCE_THETA0 = math.radians(-22.5)
REFERENCE_TILT = math.radians(22.5)
# on-Bragg coupling strength that gives the best measured efficiency, 75.2%
REFERENCE_NU = math.atanh(math.sqrt(0.752))
