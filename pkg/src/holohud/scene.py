"""Test scenes for the diffuser plane: block letters and point sources."""

from __future__ import annotations

import numpy as np

_GLYPHS = {
    "R": ["1111.", "1...1", "1...1", "1111.", "1.1..", "1..1.", "1...1"],
    "G": [".111.", "1...1", "1....", "1.111", "1...1", "1...1", ".111."],
    "B": ["1111.", "1...1", "1...1", "1111.", "1...1", "1...1", "1111."],
}


def glyph(letter: str, scale: int = 1) -> np.ndarray:
    """Binary 5x7 glyph as a float array indexed ``[ix, iy]`` with y pointing up."""
    rows = _GLYPHS[letter.upper()]
    img = np.array([[c == "1" for c in row] for row in rows], dtype=float)
    img = np.kron(img, np.ones((scale, scale)))
    # rows run top to bottom; flip so iy grows upward, then put x first
    return img[::-1].T.copy()


def letter_image(letter: str, nx: int, ny: int, scale: int, center=(0, 0)) -> np.ndarray:
    """Place a glyph on an (nx, ny) canvas; ``center`` is a sample offset from the axis."""
    g = glyph(letter, scale)
    out = np.zeros((nx, ny))
    cx, cy = nx // 2 + center[0], ny // 2 + center[1]
    x0, y0 = cx - g.shape[0] // 2, cy - g.shape[1] // 2
    if x0 < 0 or y0 < 0 or x0 + g.shape[0] > nx or y0 + g.shape[1] > ny:
        raise ValueError(f"glyph {letter!r} at {center} does not fit a {nx}x{ny} canvas")
    out[x0:x0 + g.shape[0], y0:y0 + g.shape[1]] = g
    return out


def point_image(nx: int, ny: int, offset=(0, 0)) -> np.ndarray:
    out = np.zeros((nx, ny))
    out[nx // 2 + offset[0], ny // 2 + offset[1]] = 1.0
    return out
