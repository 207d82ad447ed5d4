import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from PIL import Image

from holohud import io as hio
from holohud.config import CM, RunConfig, load_config, parse_config
from holohud.errors import ConfigError
from holohud.propagation import ComplexField, band_limited_field


def test_field_round_trip(tmp_path):
    f = band_limited_field(12, 7, 3e-6, 633e-9, seed=4)
    for order in "<>":
        path = tmp_path / f"f{order == '<'}.fld"
        hio.write_field(path, f, byteorder=order)
        g = hio.read_field(path)
        assert np.array_equal(g.data, f.data)
        assert (g.pitch_x, g.pitch_y, g.wavelength) == (f.pitch_x, f.pitch_y, f.wavelength)
        assert path.stat().st_size == hio.HEADER_SIZE + 16 * 12 * 7


def test_field_layout_is_row_major_interleaved(tmp_path):
    data = np.array([[1 + 2j, 3 + 4j], [5 + 6j, 7 + 8j]])
    path = tmp_path / "f.fld"
    hio.write_field(path, ComplexField(data, 1e-6, 1e-6, 5e-7))
    raw = path.read_bytes()
    assert raw[:8] == b"HOLOFLD1" and raw[8:9] == b"<"
    assert struct.unpack("<QQ", raw[9:25]) == (2, 2)
    assert struct.unpack("<8d", raw[hio.HEADER_SIZE:]) == (1, 2, 3, 4, 5, 6, 7, 8)


def test_malformed_fields(tmp_path):
    f = band_limited_field(8, 8, 3e-6, 633e-9)
    good = tmp_path / "good.fld"
    hio.write_field(good, f)
    raw = good.read_bytes()
    for name, blob in [("short", raw[:-8]), ("long", raw + b"\0"), ("magic", b"X" + raw[1:]),
                       ("order", raw[:8] + b"?" + raw[9:]), ("tiny", raw[:10])]:
        p = tmp_path / name
        p.write_bytes(blob)
        with pytest.raises(ConfigError):
            hio.read_field(p)


def test_pgm_round_trip_and_orientation(tmp_path):
    img = np.zeros((6, 4))
    img[5, 3] = 2.0  # largest x, largest y: top right when viewed
    img[0, 0] = 1.0
    peak = hio.write_pgm16(tmp_path / "a.pgm", img)
    assert peak == 2.0
    back = hio.read_pgm16(tmp_path / "a.pgm")
    assert back.shape == img.shape
    assert np.allclose(back, img / 2, atol=1 / 65535)
    with Image.open(tmp_path / "a.pgm") as im:
        arr = np.asarray(im)
    assert arr.shape == (4, 6) and arr[0, 5] == arr.max()


def test_png_and_image_reader(tmp_path):
    img = np.zeros((5, 3, 3))
    img[4, 2, 0] = 1.0
    img[0, 0, 2] = 0.5
    hio.write_png(tmp_path / "c.png", img)
    back = hio.read_image(tmp_path / "c.png")
    assert back.shape == (5, 3, 3)
    assert back[4, 2, 0] == 1.0 and back[0, 0, 2] == pytest.approx(0.5, abs=1 / 255)
    gray = np.linspace(0, 1, 12).reshape(4, 3)
    hio.write_png(tmp_path / "g.png", gray)
    assert np.allclose(hio.read_image(tmp_path / "g.png"), gray, atol=1 / 255)
    with pytest.raises(ConfigError):
        hio.read_image(tmp_path / "missing.png")


def test_zero_image_written_as_black(tmp_path):
    assert hio.write_pgm16(tmp_path / "z.pgm", np.zeros((3, 3))) == 0.0
    assert np.all(hio.read_pgm16(tmp_path / "z.pgm") == 0)


def test_csv_and_manifest(tmp_path):
    hio.write_csv(tmp_path / "t.csv", ["a", "b"], [(1, 0.1), ("x", 2.5)])
    assert (tmp_path / "t.csv").read_text() == "a,b\n1,0.1\nx,2.5\n"
    hio.write_manifest(tmp_path / "m.txt", {"k": 1, "z": "v"})
    assert (tmp_path / "m.txt").read_text() == "k = 1\nz = v\n"


@given(v=st.floats(allow_nan=False, allow_infinity=False))
def test_csv_floats_round_trip(v):
    assert float(hio._fmt(v)) == v


# configuration


def test_defaults_are_the_desk_preset():
    cfg = RunConfig()
    geo = cfg.system_geometry()
    assert geo.p == pytest.approx(0.03) and geo.aperture_w == pytest.approx(2.6e-3)
    assert [c.q for c in cfg.wavelength_channels()] == pytest.approx([0.15, 0.5, 1.0])
    assert cfg.distances() == pytest.approx([0.15, 0.5, 1.0])
    assert cfg.grid.pitch_um == 4.0


def test_units_convert_once():
    cfg = parse_config("geometry: {p_cm: 30, d_cm: 50}\n")
    assert cfg.system_geometry().p == pytest.approx(0.30)
    assert cfg.system_geometry(CM).p == pytest.approx(30)


def test_unknown_key_reported_with_line():
    text = "geometry:\n  p_cm: 30\n  q_cm: 4\n"
    with pytest.raises(ConfigError, match=r"<config>:3: geometry.q_cm"):
        parse_config(text)


def test_bad_value_reported_with_line():
    text = "grid:\n  nx: 64\n  pitch_um: -1\n"
    with pytest.raises(ConfigError, match=r":3: grid.pitch_um"):
        parse_config(text)
    text = "channels:\n  - {name: r, lambda_record_nm: 50, lambda_replay_nm: 600, q_cm: 3}\n"
    with pytest.raises(ConfigError, match=r":2: channels.0.lambda_record_nm"):
        parse_config(text)


def test_empty_channels_and_duplicates_rejected():
    with pytest.raises(ConfigError, match="at least one channel"):
        parse_config("channels: []\n")
    dup = ("channels:\n"
           "  - {name: a, lambda_record_nm: 500, lambda_replay_nm: 500, q_cm: 3}\n"
           "  - {name: a, lambda_record_nm: 500, lambda_replay_nm: 500, q_cm: 4}\n")
    with pytest.raises(ConfigError, match="unique"):
        parse_config(dup)


def test_invalid_sweep_and_yaml():
    with pytest.raises(ConfigError):
        parse_config("grating: {sweep: {start: 1, stop: 0}}\n")
    with pytest.raises(ConfigError):
        parse_config("grating: {sweep: {start: 0, stop: 1, points: 1}}\n")
    with pytest.raises(ConfigError, match="YAML"):
        parse_config("a: [1, 2\n")
    with pytest.raises(ConfigError):
        parse_config("- 1\n- 2\n")


def test_shipped_configs_parse(tmp_path):
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    for name in ("full_scale.yaml", "desk.yaml", "grating.yaml"):
        load_config(root / name)
    assert load_config(root / "desk.yaml") == RunConfig()
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
