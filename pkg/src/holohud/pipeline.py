"""Multi-plane reconstruction through the holographic combiner.

Each colour channel is simulated on its own wavelength in three steps:
diffuser to HOE (+p), the HOE phase screen with its hard aperture, then
backward propagation (-z) from the HOE to each requested virtual-image plane.
Channels are mutually incoherent, so colour composites add intensities.

All lengths here are in metres.
"""

from __future__ import annotations

import math
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage as ndi

from . import hoe as hoe_mod
from .errors import DomainError, SamplingError
from .hoe import HoeSpec
from .paraxial import SystemGeometry, WavelengthChannel, solve_image_distance
from .propagation import ComplexField, SamplingDiagnostics, propagate_asm, validate_sampling
from .scene import letter_image, point_image

_RGB_INDEX = {"red": 0, "green": 1, "blue": 2}


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    pitch: float

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2 or not self.pitch > 0:
            raise DomainError(f"invalid grid {self}")


@dataclass
class SceneSpec:
    """Per-channel intensity maps on the diffuser, indexed ``[ix, iy]``.

    The maps cover ``diffuser_w`` x ``diffuser_h`` metres centred on the axis.
    ``random_phase_seed`` switches on a uniform random diffuser phase.
    """

    images: dict[str, np.ndarray]
    diffuser_w: float
    diffuser_h: float
    random_phase_seed: int | None = None

    def __post_init__(self):
        if not self.images:
            raise DomainError("scene has no channel images")
        for name, img in self.images.items():
            img = np.asarray(img, dtype=float)
            if img.ndim != 2 or img.size == 0:
                raise DomainError(f"channel {name!r}: image must be a non-empty 2-D array")
            if img.min() < 0 or img.max() > 1:
                raise DomainError(f"channel {name!r}: intensities must lie in [0, 1]")
            self.images[name] = img

    @classmethod
    def on_grid(cls, images, grid: Grid, random_phase_seed=None):
        """Scene whose maps are sampled exactly on ``grid``."""
        return cls(dict(images), grid.nx * grid.pitch, grid.ny * grid.pitch, random_phase_seed)


def _resample_nearest(img: np.ndarray, width: float, height: float, grid: Grid) -> np.ndarray:
    sx, sy = img.shape
    x = (np.arange(grid.nx) - grid.nx // 2) * grid.pitch
    y = (np.arange(grid.ny) - grid.ny // 2) * grid.pitch
    ix = np.floor((x + width / 2) / width * sx).astype(int)
    iy = np.floor((y + height / 2) / height * sy).astype(int)
    okx = (ix >= 0) & (ix < sx)
    oky = (iy >= 0) & (iy < sy)
    out = np.zeros((grid.nx, grid.ny))
    out[np.ix_(okx, oky)] = img[np.ix_(ix[okx], iy[oky])]
    return out


def source_field(scene: SceneSpec, channel: str, grid: Grid, wavelength: float) -> ComplexField:
    """Field leaving the diffuser: amplitude ``sqrt(I)``, zero or seeded random phase."""
    img = scene.images[channel]
    if img.shape == (grid.nx, grid.ny) and math.isclose(scene.diffuser_w, grid.nx * grid.pitch) \
            and math.isclose(scene.diffuser_h, grid.ny * grid.pitch):
        intensity = img
    else:
        intensity = _resample_nearest(img, scene.diffuser_w, scene.diffuser_h, grid)
    amp = np.sqrt(intensity).astype(np.complex128)
    if scene.random_phase_seed is not None:
        rng = np.random.default_rng([scene.random_phase_seed, zlib.crc32(channel.encode())])
        amp *= np.exp(2j * np.pi * rng.random(amp.shape))
    return ComplexField(amp, grid.pitch, grid.pitch, wavelength)


@dataclass
class ChannelResult:
    channel: str
    distances: list[float]
    images: list[np.ndarray]
    diagnostics: dict[str, SamplingDiagnostics] = field(default_factory=dict)


def designed_distance(hoe: HoeSpec, p: float) -> float | None:
    """Virtual-image distance the element produces for an object at ``p``."""
    return solve_image_distance(p, hoe.r0) if hoe.r0 > p else None


def simulate_channel(scene: SceneSpec, hoe: HoeSpec, geometry: SystemGeometry, distances, *,
                     grid: Grid, channel: str, override_sampling: bool = False,
                     workers: int | None = None) -> ChannelResult:
    """Reconstruct one channel's intensity at each virtual-image distance.

    The diffuser-to-HOE step, the HOE phase and the HOE-to-designed-plane step
    must pass their sampling checks. Off-design planes are computed with the
    band-limited transfer function regardless (their defocus blur is expected
    to outgrow the window) and their diagnostics are recorded.
    """
    distances = [float(z) for z in distances]
    if not distances:
        raise DomainError("at least one observation distance is required")
    if min(distances) <= 0:
        raise DomainError("observation distances must be positive")
    src = source_field(scene, channel, grid, hoe.wavelength)
    diags = {"diffuser_to_hoe": validate_sampling(src, geometry.p)}
    at_hoe = propagate_asm(src, geometry.p, override_sampling=override_sampling, workers=workers)
    after = hoe_mod.apply(at_hoe, hoe, override_sampling=override_sampling)

    q_design = designed_distance(hoe, geometry.p)
    if q_design is not None:
        diag = validate_sampling(after, -q_design)
        diags["hoe_to_design_plane"] = diag
        if not diag.ok and not override_sampling:
            raise SamplingError(f"{channel}: backward step to the designed plane aliases: "
                                f"{diag.summary()}", diag)
    images = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for z in distances:
            diags[f"plane_{z:.6g}"] = validate_sampling(after, -z)
            out = propagate_asm(after, -z, override_sampling=True, workers=workers)
            images.append(out.intensity)
    return ChannelResult(channel, distances, images, diags)


def focus_metric(image) -> float:
    """Variance of the discrete Laplacian of the image divided by its mean."""
    img = np.asarray(image, dtype=float)
    if img.size == 0:
        raise DomainError("empty image")
    mean = img.mean()
    if mean == 0:
        return 0.0
    return float(ndi.laplace(img / mean, mode="nearest").var())


def _box_resample_axis(a, edges, axis):
    n = a.shape[axis]
    pos = np.arange(n + 1) - 0.5
    pad = [(0, 0)] * a.ndim
    pad[axis] = (1, 0)
    cum = np.pad(np.cumsum(a, axis=axis), pad)
    cum = np.moveaxis(cum, axis, -1)
    shape = cum.shape
    flat = cum.reshape(-1, shape[-1])
    vals = np.stack([np.interp(edges, pos, row) for row in flat])
    vals = np.diff(vals, axis=-1).reshape(shape[:-1] + (len(edges) - 1,))
    return np.moveaxis(vals, -1, axis)


def view_frame(images, distances, pitch: float, eye_relief: float) -> list[np.ndarray]:
    """Resample plane images onto a common angular grid as seen from the eye.

    A plane at distance ``z`` behind the HOE is viewed from ``eye_relief`` in
    front of it, so one sample subtends ``pitch / (z + eye_relief)``. Every
    image is box-averaged to the coarsest of these pitches and cropped to the
    angular window of the farthest plane, which makes the scores comparable
    across planes whose geometric magnification differs.
    """
    distances = list(distances)
    zmin, zmax = min(distances), max(distances)
    alpha = pitch / (zmin + eye_relief)
    out = []
    for img, z in zip(images, distances):
        nx, ny = img.shape
        mx = 2 * int(math.floor(nx * pitch / (zmax + eye_relief) / alpha / 2))
        my = 2 * int(math.floor(ny * pitch / (zmax + eye_relief) / alpha / 2))
        step = alpha * (z + eye_relief) / pitch
        ex = (np.arange(mx + 1) - mx / 2) * step + nx // 2
        ey = (np.arange(my + 1) - my / 2) * step + ny // 2
        out.append(_box_resample_axis(_box_resample_axis(img, ex, 0), ey, 1))
    return out


@dataclass
class FocusCurve:
    channel: str
    distances: list[float]
    scores: list[float]

    @property
    def best(self) -> float:
        return self.distances[int(np.argmax(self.scores))]


def score_planes(result: ChannelResult, pitch: float, eye_relief: float) -> FocusCurve:
    views = view_frame(result.images, result.distances, pitch, eye_relief)
    return FocusCurve(result.channel, list(result.distances), [focus_metric(v) for v in views])


def depth_scan(scene, hoe, geometry, distances, *, grid, channel, **kwargs) -> dict[str, FocusCurve]:
    """Focus curve for one channel over the given distances, keyed by channel name."""
    result = simulate_channel(scene, hoe, geometry, distances, grid=grid, channel=channel, **kwargs)
    return {channel: score_planes(result, grid.pitch, geometry.d)}


@dataclass
class ReconstructionStack:
    grid: Grid
    distances: list[float]
    channels: dict[str, ChannelResult]
    focus: dict[str, FocusCurve]

    def plane(self, channel: str, distance: float) -> np.ndarray:
        res = self.channels[channel]
        return res.images[res.distances.index(distance)]

    def composite(self, distance: float) -> np.ndarray:
        """Incoherent colour composite of one plane, shape (nx, ny, 3)."""
        out = np.zeros((self.grid.nx, self.grid.ny, 3))
        for i, (name, res) in enumerate(sorted(self.channels.items())):
            out[..., _RGB_INDEX.get(name, i % 3)] += self.plane(name, distance)
        return out


def simulate_rgb(scene: SceneSpec, hoes: dict[str, HoeSpec], geometry: SystemGeometry,
                 distances, *, grid: Grid, threads: int = 1, **kwargs) -> ReconstructionStack:
    """Run every channel over the same observation distances.

    Channels are independent work units; with ``threads > 1`` they run
    concurrently and the results are merged by channel name.
    """
    if not hoes:
        raise DomainError("at least one channel is required")
    distances = sorted(float(z) for z in distances)
    if len(set(distances)) != len(distances):
        raise DomainError("observation distances must be distinct")
    names = sorted(hoes)

    def run(name):
        return simulate_channel(scene, hoes[name], geometry, distances, grid=grid, channel=name,
                                **kwargs)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(names, pool.map(run, names)))
    else:
        results = {name: run(name) for name in names}
    focus = {name: score_planes(results[name], grid.pitch, geometry.d) for name in names}
    return ReconstructionStack(grid, distances, results, focus)


def second_moment_widths(image, threshold: float = 0.01):
    """Centroid and RMS widths (in samples) of the pixels above ``threshold * max``.

    Returns ``(cx, cy, sx, sy)`` with the centroid relative to the grid centre.
    """
    img = np.asarray(image, dtype=float)
    w = np.where(img >= threshold * img.max(), img, 0.0)
    total = w.sum()
    if total == 0:
        raise DomainError("image has no energy")
    x = (np.arange(img.shape[0]) - img.shape[0] // 2)[:, None]
    y = (np.arange(img.shape[1]) - img.shape[1] // 2)[None, :]
    cx = (w * x).sum() / total
    cy = (w * y).sum() / total
    sx = math.sqrt((w * (x - cx) ** 2).sum() / total)
    sy = math.sqrt((w * (y - cy) ** 2).sum() / total)
    return float(cx), float(cy), sx, sy


def centroid_spread(image, threshold: float = 0.1) -> float:
    """RMS radius about the centroid [samples], ignoring pixels below ``threshold * max``."""
    _, _, sx, sy = second_moment_widths(image, threshold)
    return math.hypot(sx, sy)


@dataclass(frozen=True)
class AstigmatismResult:
    theta: float
    ratio: float
    widths: tuple[float, float]
    centroid: tuple[float, float]
    distance: float

    @property
    def elongation(self) -> str:
        if math.isclose(self.ratio, 1.0, rel_tol=1e-3):
            return "none"
        return "vertical" if self.ratio > 1 else "horizontal"


def astigmatism_report(hoe: HoeSpec, geometry: SystemGeometry, *, grid: Grid,
                       threshold: float = 0.01, override_sampling: bool = False,
                       workers: int | None = None) -> AstigmatismResult:
    """Image an on-axis point through ``hoe`` and measure the spot's y/x width ratio.

    The spot is taken at the designed virtual-image plane. Widths are second
    moments of the pixels above ``threshold`` of the peak.
    """
    q = designed_distance(hoe, geometry.p)
    if q is None:
        raise DomainError("element forms no virtual image for this object distance")
    scene = SceneSpec.on_grid({"point": point_image(grid.nx, grid.ny)}, grid)
    res = simulate_channel(scene, hoe, geometry, [q], grid=grid, channel="point",
                           override_sampling=override_sampling, workers=workers)
    cx, cy, sx, sy = second_moment_widths(res.images[0], threshold)
    return AstigmatismResult(hoe.theta, sy / sx, (sx, sy), (cx, cy), q)


# desk-scale layout: full-scale design distances read in mm instead of cm
DESK_GRID = Grid(1024, 1024, 4e-6)
DESK_GEOMETRY = SystemGeometry(p=0.030, d=0.050, aperture_w=2.6e-3, aperture_h=1.95e-3,
                               diffuser_w=0.010, diffuser_h=0.010)
DESK_CHANNELS = (
    WavelengthChannel("red", 639.0, 636.0, 150.0),
    WavelengthChannel("green", 532.0, 528.0, 500.0),
    WavelengthChannel("blue", 457.0, 449.0, 1000.0),
)
DESK_LETTER_SCALE = 2
DESK_LETTER_OFFSETS = {"red": ("R", (-11, 0)), "blue": ("B", (0, 0)), "green": ("G", (11, 0))}

# small-q layout for the carrier-tilt study: keeps a 3 degree carrier sampled and on-grid
ASTIGMATISM_GRID = Grid(1536, 1536, 2e-6)
ASTIGMATISM_GEOMETRY = SystemGeometry(p=0.010, d=0.050, aperture_w=2.8e-3, aperture_h=2.8e-3,
                                      diffuser_w=2.8e-3, diffuser_h=2.8e-3)
ASTIGMATISM_Q = 0.020
ASTIGMATISM_WAVELENGTH = 532e-9


def desk_hoes(channels=DESK_CHANNELS, geometry=DESK_GEOMETRY, theta=0.0) -> dict[str, HoeSpec]:
    """One HOE per channel, designed at the replay wavelength; channel q read in mm."""
    return {c.name: HoeSpec.for_image_distance(geometry.p, c.q * 1e-3, c.lambda_replay * 1e-9,
                                               geometry.aperture_w, geometry.aperture_h, theta)
            for c in channels}


def letters_scene(grid: Grid = DESK_GRID, layout=None, scale: int = DESK_LETTER_SCALE,
                  random_phase_seed=None) -> SceneSpec:
    """Block letters R, G and B, one per channel, side by side near the axis."""
    layout = DESK_LETTER_OFFSETS if layout is None else layout
    images = {name: letter_image(letter, grid.nx, grid.ny, scale, offset)
              for name, (letter, offset) in layout.items()}
    return SceneSpec.on_grid(images, grid, random_phase_seed)
