"""File formats: raw complex fields, intensity images, CSV tables, run manifests.

Raw complex field layout (all header numbers in the stated byte order)::

    8 bytes   magic  b"HOLOFLD1"
    1 byte    byte order, b"<" (little) or b">" (big)
    2 x u64   nx, ny
    3 x f64   pitch_x, pitch_y, wavelength  [m]
    payload   nx * ny complex values as interleaved (re, im) f64 pairs,
              row-major over [ix, iy] (iy varies fastest)

The file size must equal header plus payload exactly.

Images are stored with rows along y (top row = largest y) and columns along
x, so they look upright in a viewer. Intensities are divided by the image
maximum before quantisation; the scale is returned so callers can record it.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError
from .propagation import ComplexField

MAGIC = b"HOLOFLD1"
_HEADER = "QQddd"
HEADER_SIZE = len(MAGIC) + 1 + struct.calcsize("<" + _HEADER)


def write_field(path, field: ComplexField, byteorder: str = "<") -> None:
    if byteorder not in "<>":
        raise ValueError("byteorder must be '<' or '>'")
    head = struct.pack(byteorder + _HEADER, field.nx, field.ny, field.pitch_x, field.pitch_y,
                       field.wavelength)
    payload = np.ascontiguousarray(field.data).view(np.float64).astype(byteorder + "f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + byteorder.encode() + head + payload.tobytes())


def read_field(path) -> ComplexField:
    """Read a raw complex field; any header/payload inconsistency raises ConfigError."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE or raw[:len(MAGIC)] != MAGIC:
        raise ConfigError(f"{path}: not a raw complex field file")
    order = raw[len(MAGIC):len(MAGIC) + 1].decode("latin-1")
    if order not in ("<", ">"):
        raise ConfigError(f"{path}: bad byte-order flag {order!r}")
    nx, ny, px, py, lam = struct.unpack_from(order + _HEADER, raw, len(MAGIC) + 1)
    expected = HEADER_SIZE + 16 * nx * ny
    if len(raw) != expected:
        raise ConfigError(f"{path}: header promises {nx}x{ny} samples ({expected} bytes), "
                          f"file has {len(raw)} bytes")
    vals = np.frombuffer(raw, dtype=order + "f8", offset=HEADER_SIZE).astype(np.float64)
    data = (vals[0::2] + 1j * vals[1::2]).reshape(nx, ny)
    try:
        return ComplexField(data, px, py, lam)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _upright(image: np.ndarray) -> np.ndarray:
    # [ix, iy] -> rows along y, top row = largest y
    return np.asarray(image, dtype=float).T[::-1]


def _normalise(image: np.ndarray) -> tuple[np.ndarray, float]:
    peak = float(np.max(image)) if np.size(image) else 0.0
    if peak <= 0:
        return np.zeros_like(image, dtype=float), 0.0
    return np.clip(image / peak, 0, 1), peak


def write_pgm16(path, image) -> float:
    """16-bit binary PGM of a non-negative (nx, ny) image; returns the peak used."""
    norm, peak = _normalise(_upright(image))
    q = np.round(norm * 65535).astype(">u2")
    rows, cols = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        fh.write(q.tobytes())
    return peak


def read_pgm16(path) -> np.ndarray:
    """Inverse of :func:`write_pgm16` up to scale: values in [0, 1], indexed [ix, iy]."""
    with open(path, "rb") as fh:
        tokens = []
        while len(tokens) < 4:
            line = fh.readline()
            if not line:
                raise ConfigError(f"{path}: truncated PGM header")
            tokens += line.split(b"#")[0].split()
        if tokens[0] != b"P5":
            raise ConfigError(f"{path}: not a binary PGM")
        cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        dtype = ">u2" if maxval > 255 else "u1"
        data = np.frombuffer(fh.read(), dtype=dtype)
    if data.size != rows * cols:
        raise ConfigError(f"{path}: PGM payload size mismatch")
    return data.reshape(rows, cols)[::-1].T.astype(float) / maxval


def write_png(path, image) -> float:
    """8-bit preview: grayscale for (nx, ny), RGB for (nx, ny, 3). Returns the peak used."""
    img = np.asarray(image, dtype=float)
    if img.ndim == 3:
        norm, peak = _normalise(np.stack([_upright(img[..., c]) for c in range(3)], axis=-1))
    else:
        norm, peak = _normalise(_upright(img))
    Image.fromarray(np.round(norm * 255).astype(np.uint8)).save(path)
    return peak


def read_image(path) -> np.ndarray:
    """Load a grayscale or colour image as float intensities in [0, 1], indexed [ix, iy(, c)]."""
    try:
        with Image.open(path) as im:
            mode = im.mode
            arr = np.asarray(im.convert("RGB" if mode in ("RGB", "RGBA", "P") else "I"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read image {path}: {exc}") from exc
    arr = arr.astype(float)
    if arr.ndim == 3:
        arr = arr / 255.0
        return np.transpose(arr[::-1], (1, 0, 2)).copy()
    arr = arr / (65535.0 if arr.max() > 255 else 255.0)
    return arr[::-1].T.copy()


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_manifest(path, entries: dict) -> None:
    """Plain ``key = value`` lines in insertion order; written after every other output."""
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")
