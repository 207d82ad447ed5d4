import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holohud import grating as gr
from holohud.errors import DegenerateError, DomainError
from holohud.paraxial import TABLE_CHANNELS, WavelengthChannel

FIXTURE = dict(n0=gr.REFERENCE_N0, thickness=gr.REFERENCE_THICKNESS,
               grating_tilt=gr.REFERENCE_TILT, theta0=gr.REFERENCE_THETA0)


def red_spec():
    return gr.grating_for_channel(TABLE_CHANNELS[0], **FIXTURE)


def test_spec_validation():
    with pytest.raises(DomainError):
        gr.GratingSpec(0, 0, 0, 1.5, 0.01, 1e-5)
    with pytest.raises(DomainError):
        gr.GratingSpec(1e7, 0, 0, 1.5, 1.6, 1e-5)
    with pytest.raises(DomainError):
        gr.GratingSpec(1e7, 0, 0, 1.5, 0.01, 1e-5, c_s=0)
    with pytest.raises(DomainError):
        gr.Detuning(math.inf, 0)
    with pytest.raises(DomainError):
        gr.LayerStack(1.2, 0.5, 1)


def test_reflection_geometry_of_the_fixture():
    g = red_spec()
    assert g.c_s < 0 < g.c_r
    # Bragg: K = 2 beta cos(phi - theta0) with beta = 2 pi n0 / lambda
    assert g.k_mag == pytest.approx(2 * 2 * math.pi * 1.5 / 639e-9 * math.cos(math.radians(45)))


def test_coupling_strength_round_trip():
    g = red_spec()
    g2 = gr.with_nu(g, 1.2, 636e-9)
    assert g2.nu(636e-9) == pytest.approx(1.2)


def test_mismatch_examples():
    g = red_spec()
    assert gr.bragg_mismatch(g, gr.Detuning()) == 0
    assert gr.bragg_mismatch(g, gr.Detuning(0, 1e-9)) < 0
    dl = 3e-9
    dt = gr.compensating_angle(g, dl)
    d_lambda_only = gr.bragg_mismatch(g, gr.Detuning(0, dl))
    assert abs(gr.bragg_mismatch(g, gr.Detuning(dt, dl))) <= 1e-12 * abs(d_lambda_only)
    assert gr.compensating_angle(g, 0) == 0


def test_compensation_degenerate():
    g = gr.GratingSpec(1e7, 0.3, 0.3, 1.5, 0.0, 1e-5)
    with pytest.raises(DegenerateError):
        gr.compensating_angle(g, 1e-9)


def test_xi_from_delta():
    g = red_spec()
    assert gr.xi_from_delta(g, 0) == 0
    thick = gr.GratingSpec(g.k_mag, g.grating_tilt, g.theta0, g.n0, 0, 2 * g.thickness, g.c_r, g.c_s)
    assert gr.xi_from_delta(thick, 1e5) == pytest.approx(2 * gr.xi_from_delta(g, 1e5))
    # red channel offset gives a finite dephasing
    delta = gr.bragg_mismatch(g, gr.Detuning(0, -3e-9))
    assert math.isfinite(gr.xi_from_delta(g, delta)) and gr.xi_from_delta(g, delta) != 0


def test_efficiency_closed_forms():
    # independent oracle: tanh^2(2) = 0.92935...
    assert gr.reflection_efficiency(2, 0) == pytest.approx(math.tanh(2) ** 2, abs=1e-12)
    assert gr.reflection_efficiency(2, 0) == pytest.approx(0.92935, abs=1e-4)
    assert gr.reflection_efficiency(0, 0) == 0
    assert gr.reflection_efficiency(0, 3.0) == 0
    # continuous across xi = nu, where it equals nu^2 / (nu^2 + 1)
    assert gr.reflection_efficiency(1.0, 1.0) == pytest.approx(0.5)
    assert gr.reflection_efficiency(1.0, 1 + 1e-9) == pytest.approx(0.5, abs=1e-8)
    # first zero past the main lobe: sqrt(xi^2 - nu^2) = pi
    assert gr.reflection_efficiency(1.0, math.sqrt(1 + math.pi ** 2)) == pytest.approx(0, abs=1e-20)
    with pytest.raises(DomainError):
        gr.reflection_efficiency(math.nan, 0)
    with pytest.raises(DomainError):
        gr.reflection_efficiency(-1, 0)


def test_main_lobe_decreasing():
    nu = 2.0
    edge = math.sqrt(math.pi ** 2 + nu ** 2)
    xi = np.linspace(0, edge, 400)
    eta = gr.reflection_efficiency(nu, xi)
    assert np.all(np.diff(eta) < 0)


def test_large_arguments_are_stable():
    eta = gr.reflection_efficiency(np.array([50.0, 400.0, 800.0]), 0.0)
    assert np.all(eta == 1.0)
    assert gr.reflection_efficiency(800.0, 799.0) == pytest.approx(1.0)


def test_fit_modulation():
    assert gr.fit_modulation(math.tanh(1.5) ** 2) == pytest.approx(1.5, abs=1e-8)
    # independent closed-form inverse
    assert gr.fit_modulation(0.752) == pytest.approx(math.atanh(math.sqrt(0.752)), abs=1e-9)
    assert gr.fit_modulation(0) == 0
    nu = gr.fit_modulation(0.3, xi=1.0)
    assert gr.reflection_efficiency(nu, 1.0) == pytest.approx(0.3, abs=1e-10)
    with pytest.raises(DomainError):
        gr.fit_modulation(1.0)


def test_ranking_red_green_blue():
    r = gr.replay_ranking(TABLE_CHANNELS, nu=gr.REFERENCE_NU, **FIXTURE)
    assert [e.name for e in r] == ["red", "green", "blue"]


def test_ranking_trivial_cases():
    flat = [WavelengthChannel(c.name, c.lambda_record, c.lambda_record, c.q) for c in TABLE_CHANNELS]
    r = gr.replay_ranking(flat, nu=1.1, **FIXTURE)
    assert all(e.eta == pytest.approx(math.tanh(1.1) ** 2, abs=1e-14) for e in r)
    mixed = [TABLE_CHANNELS[0], WavelengthChannel("blue", 457, 457, 1000), TABLE_CHANNELS[1]]
    assert gr.replay_ranking(mixed, nu=1.1, **FIXTURE)[0].name == "blue"


def _main_lobe_scale():
    # largest factor that keeps every channel's |xi| inside the main lobe
    nu = gr.REFERENCE_NU
    edge = math.sqrt(math.pi ** 2 + nu ** 2)
    worst = max(abs(e.xi) for e in gr.replay_ranking(TABLE_CHANNELS, nu=nu, **FIXTURE))
    return edge / worst


@given(s=st.floats(0.05, 1.0))
def test_ranking_invariant_under_scaling(s):
    s = s * _main_lobe_scale()
    scaled = [WavelengthChannel(c.name, c.lambda_record, c.lambda_record + s * c.detuning_nm, c.q)
              for c in TABLE_CHANNELS]
    r = gr.replay_ranking(scaled, nu=gr.REFERENCE_NU, **FIXTURE)
    assert [e.name for e in r] == ["red", "green", "blue"]


@given(a=st.floats(-1e-2, 1e-2), b=st.floats(-1e-8, 1e-8), c=st.floats(-5, 5))
def test_mismatch_linear(a, b, c):
    g = red_spec()
    lhs = gr.bragg_mismatch(g, gr.Detuning(c * a, c * b))
    rhs = c * gr.bragg_mismatch(g, gr.Detuning(a, b))
    scale = abs(c) * (abs(a) * g.k_mag + abs(b) * g.k_mag ** 2)
    assert abs(lhs - rhs) <= 1e-12 * scale + 1e-300


@given(nu=st.floats(0, 50), xi=st.floats(-200, 200))
def test_efficiency_bounded_and_even(nu, xi):
    e = gr.reflection_efficiency(nu, xi)
    assert 0 <= e <= 1
    assert e == gr.reflection_efficiency(nu, -xi)


@given(nu=st.floats(0, 15), dnu=st.floats(1e-3, 2))
def test_efficiency_increasing_in_nu_on_bragg(nu, dnu):
    assert gr.reflection_efficiency(nu + dnu, 0) >= gr.reflection_efficiency(nu, 0)
    if nu + dnu < 8:
        assert gr.reflection_efficiency(nu + dnu, 0) > gr.reflection_efficiency(nu, 0)


@given(dl=st.floats(-2e-8, 2e-8))
def test_compensation_composes_to_zero(dl):
    g = red_spec()
    dt = gr.compensating_angle(g, dl)
    ref = abs(dl) * g.k_mag ** 2 / (4 * math.pi * g.n0)
    assert abs(gr.bragg_mismatch(g, gr.Detuning(dt, dl))) <= 4 * np.finfo(float).eps * ref + 1e-300


def test_transmittance():
    assert gr.transmittance_stack(gr.LayerStack(0.90, 0.88, 3)) == pytest.approx(0.6133, abs=1e-4)
    assert gr.transmittance_stack(gr.LayerStack(0.7, 0.3, 0)) == 0.7
    assert gr.transmittance_stack(gr.LayerStack(1.0, 1.0, 5)) == 1.0


@given(t=st.floats(0, 1), u=st.floats(0, 1), n=st.integers(0, 20))
def test_transmittance_non_increasing(t, u, n):
    assert gr.transmittance_stack(gr.LayerStack(t, u, n + 1)) <= gr.transmittance_stack(
        gr.LayerStack(t, u, n))


def test_detuning_curve():
    g = red_spec()
    rows = gr.detuning_curve(g, 1.3, d_lambdas=[0.0])
    assert rows == [(0.0, 0.0, 0.0, pytest.approx(math.tanh(1.3) ** 2))]
    rows = gr.detuning_curve(g, 1.3, d_thetas=np.linspace(-0.01, 0.01, 5))
    assert len(rows) == 5 and rows[2][3] == pytest.approx(math.tanh(1.3) ** 2)
    with pytest.raises(DomainError):
        gr.detuning_curve(g, 1.3)
