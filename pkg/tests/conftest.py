import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from holohud import pipeline as pl

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def desk_stack():
    """Letters R, G, B through the desk-scale preset at the three designed planes."""
    hoes = pl.desk_hoes()
    return pl.simulate_rgb(pl.letters_scene(), hoes, pl.DESK_GEOMETRY, [0.15, 0.5, 1.0],
                           grid=pl.DESK_GRID)


@pytest.fixture(scope="session")
def astigmatism_scan():
    """Point-image width ratio for carrier tilts 0 to 3 degrees."""
    out = {}
    for deg in (0, 1, 2, 3):
        hoe = pl.HoeSpec.for_image_distance(pl.ASTIGMATISM_GEOMETRY.p, pl.ASTIGMATISM_Q,
                                            pl.ASTIGMATISM_WAVELENGTH,
                                            pl.ASTIGMATISM_GEOMETRY.aperture_w,
                                            pl.ASTIGMATISM_GEOMETRY.aperture_h,
                                            theta=math.radians(deg))
        out[deg] = pl.astigmatism_report(hoe, pl.ASTIGMATISM_GEOMETRY, grid=pl.ASTIGMATISM_GRID)
    return out


@pytest.fixture(scope="session")
def oracle_suite():
    """Ten compact band-limited fields with propagation distances, all at most 64 x 64."""
    from holohud.propagation import band_limited_field
    cases = [
        # (nx, ny, pitch, wavelength, band, envelope, z)
        (64, 64, 4e-6, 532e-9, 0.3, 0.1, 2e-3),
        (64, 64, 4e-6, 532e-9, 0.3, 0.1, -2e-3),
        (64, 64, 4e-6, 633e-9, 0.2, 0.1, 3e-3),
        (64, 64, 4e-6, 450e-9, 0.2, 0.1, 4e-3),
        (64, 64, 4e-6, 532e-9, 0.4, 0.1, 2e-3),
        (64, 48, 4e-6, 532e-9, 0.3, 0.1, 2.5e-3),
        (48, 64, 5e-6, 633e-9, 0.3, 0.1, 3e-3),
        (64, 64, 3e-6, 532e-9, 0.2, 0.1, 1.5e-3),
        (32, 32, 5e-6, 532e-9, 0.2, 0.12, 4e-3),
        (64, 64, 4e-6, 532e-9, 0.2, 0.1, -4e-3),
    ]
    return [(band_limited_field(nx, ny, p, lam, band=b, envelope=e, seed=i), z)
            for i, (nx, ny, p, lam, b, e, z) in enumerate(cases)]


def rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
