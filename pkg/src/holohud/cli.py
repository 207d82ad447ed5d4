"""Command-line entry points: design, simulate, grating, propagate.

Exit codes: 0 success, 2 configuration or input error, 3 sampling
(numerical validity) error, 4 internal error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import grating as gr
from . import io as hio
from .config import CM, UM, RunConfig, dump_config, load_config
from .errors import ConfigError, DomainError, SamplingError
from .hoe import HoeSpec
from .paraxial import design_report, solve_focal, tradeoff_sweep
from .pipeline import DESK_LETTER_OFFSETS, Grid, SceneSpec, letters_scene, simulate_rgb
from .propagation import energy, propagate_asm, propagate_direct

OUT_ENV = "HOLOHUD_OUT_DIR"
EXIT_OK, EXIT_INPUT, EXIT_SAMPLING, EXIT_INTERNAL = 0, 2, 3, 4


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _out_dir(args, cfg: RunConfig) -> Path:
    # --out beats the environment, which beats the config file
    out = args.out or os.environ.get(OUT_ENV) or cfg.output_dir or "holohud_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _base_manifest(command: str, args, cfg: RunConfig | None) -> dict:
    m = {"command": command, "version": _version(), "config_file": args.config or "<preset>",
         "override_sampling": args.override_sampling, "threads": args.threads}
    if cfg is not None:
        m["config"] = "\n  " + dump_config(cfg).rstrip().replace("\n", "\n  ")
    return m


def cmd_design(args) -> int:
    cfg = load_config(args.config)
    geometry = cfg.system_geometry(CM)
    channels = cfg.wavelength_channels(CM)
    report = design_report(geometry, channels, cfg.design.sweep_points)
    out = _out_dir(args, cfg)
    text = report.to_text("cm")
    (out / "design_report.txt").write_text(text)
    written = ["design_report.txt"]
    for c in channels if cfg.design.sweep_points else []:
        rows = tradeoff_sweep(geometry, c, cfg.design.sweep_axis, cfg.design.sweep_points)
        name = f"tradeoff_{c.name}.csv"
        hio.write_csv(out / name, ["x1_cm", "fov_deg", "eb_cm"],
                      [(r.x1, r.fov, r.eb) for r in rows])
        written.append(name)
    manifest = _base_manifest("design", args, cfg)
    manifest["outputs"] = ", ".join(written)
    hio.write_manifest(out / "manifest.txt", manifest)
    print(text, end="")
    return EXIT_OK


def _hoes(cfg: RunConfig, geometry, theta_deg: float) -> dict[str, HoeSpec]:
    hoes = {}
    for c, wc in zip(cfg.channels, cfg.wavelength_channels()):
        o = c.hoe
        r0 = o.r0_cm * CM if o.r0_cm is not None else solve_focal(geometry.p, wc.q)
        theta = math.radians(o.theta_deg if o.theta_deg is not None else theta_deg)
        aw = o.aperture_w_cm * CM if o.aperture_w_cm is not None else geometry.aperture_w
        ah = o.aperture_h_cm * CM if o.aperture_h_cm is not None else geometry.aperture_h
        hoes[c.name] = HoeSpec(r0, theta, aw, ah, wc.lambda_replay * 1e-9)
    return hoes


def _scene(cfg: RunConfig, grid: Grid, geometry, seed, config_path) -> SceneSpec:
    names = [c.name for c in cfg.channels]
    if cfg.scene.image is None:
        missing = [n for n in names if n not in DESK_LETTER_OFFSETS]
        if missing:
            raise ConfigError(f"built-in letter scene has no letter for channels {missing}; "
                              "set scene.image")
        layout = {n: DESK_LETTER_OFFSETS[n] for n in names}
        try:
            return letters_scene(grid, layout, cfg.scene.letter_scale, seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    path = Path(cfg.scene.image)
    if not path.is_absolute() and config_path:
        path = Path(config_path).parent / path
    img = hio.read_image(path)
    rgb = {"red": 0, "green": 1, "blue": 2}
    if img.ndim == 3:
        images = {n: img[..., rgb.get(n, 1)] for n in names}
    else:
        images = {n: img for n in names}
    return SceneSpec(images, geometry.diffuser_w, geometry.diffuser_h, seed)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    geometry = cfg.system_geometry()
    grid = Grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.pitch_um * UM)
    seed = args.seed if args.seed is not None else cfg.scene.random_phase_seed
    scene = _scene(cfg, grid, geometry, seed, args.config)
    hoes = _hoes(cfg, geometry, cfg.simulate.theta_deg)
    distances = cfg.distances()
    out = _out_dir(args, cfg)
    workers = args.threads if args.threads > 1 else None
    stack = simulate_rgb(scene, hoes, geometry, distances, grid=grid, threads=args.threads,
                         override_sampling=args.override_sampling, workers=workers)

    manifest = _base_manifest("simulate", args, cfg)
    manifest["random_phase_seed"] = seed
    manifest["image_normalisation"] = "each image divided by its own peak; peaks listed below"
    written = []
    for z in stack.distances:
        tag = f"{z / CM:g}cm"
        for name in sorted(stack.channels):
            fname = f"{name}_{tag}.pgm"
            peak = hio.write_pgm16(out / fname, stack.plane(name, z))
            manifest[f"peak {fname}"] = repr(peak)
            written.append(fname)
        fname = f"composite_{tag}.png"
        peak = hio.write_png(out / fname, stack.composite(z))
        manifest[f"peak {fname}"] = repr(peak)
        written.append(fname)
    rows = [(name, z * 1e3, s) for name in sorted(stack.focus)
            for z, s in zip(stack.focus[name].distances, stack.focus[name].scores)]
    hio.write_csv(out / "focus.csv", ["channel", "distance_mm", "focus_score"], rows)
    written.append("focus.csv")
    for name in sorted(stack.channels):
        res = stack.channels[name]
        manifest[f"best_focus_mm {name}"] = f"{stack.focus[name].best * 1e3:g}"
        for key, d in res.diagnostics.items():
            manifest[f"sampling {name} {key}"] = d.summary()
    manifest["outputs"] = ", ".join(written)
    hio.write_manifest(out / "manifest.txt", manifest)
    for name in sorted(stack.focus):
        print(f"{name}: best focus at {stack.focus[name].best / CM:g} cm")
    return EXIT_OK


def cmd_grating(args) -> int:
    cfg = load_config(args.config)
    g = cfg.grating
    sw = g.sweep
    nu = g.nu if g.nu is not None else gr.fit_modulation(g.eta_measured)
    channels = cfg.wavelength_channels()
    tilt, theta0 = math.radians(g.grating_tilt_deg), math.radians(g.theta0_deg)
    thickness = g.thickness_um * UM
    out = _out_dir(args, cfg)
    written = []
    offsets = np.linspace(sw.start, sw.stop, sw.points)
    for c in channels:
        spec = gr.grating_for_channel(c, g.n0, thickness, tilt, theta0)
        if sw.axis == "lambda":
            rows = gr.detuning_curve(spec, nu, d_lambdas=offsets * 1e-9)
            rows = [(o, *r[1:]) for o, r in zip(offsets, rows)]
            header = ["d_lambda_nm", "delta", "xi", "eta"]
        else:
            rows = gr.detuning_curve(spec, nu, d_thetas=np.radians(offsets))
            rows = [(o, *r[1:]) for o, r in zip(offsets, rows)]
            header = ["d_theta_deg", "delta", "xi", "eta"]
        name = f"detuning_{c.name}.csv"
        hio.write_csv(out / name, header, rows)
        written.append(name)

    ranking = gr.replay_ranking(channels, nu=nu, n0=g.n0, thickness=thickness,
                                grating_tilt=tilt, theta0=theta0)
    header = ["channel", "d_lambda_nm", "delta", "xi", "eta"]
    rows = []
    for e in ranking:
        row = [e.name, e.d_lambda * 1e9, e.delta, e.xi, e.eta]
        if g.compensation:
            spec = gr.grating_for_channel(next(c for c in channels if c.name == e.name),
                                          g.n0, thickness, tilt, theta0)
            row.append(math.degrees(gr.compensating_angle(spec, e.d_lambda)))
        rows.append(row)
    if g.compensation:
        header.append("compensating_angle_deg")
    hio.write_csv(out / "efficiency.csv", header, rows)
    written.append("efficiency.csv")

    manifest = _base_manifest("grating", args, cfg)
    manifest["nu"] = repr(nu)
    print(f"coupling strength nu = {nu:.6g}")
    for e in ranking:
        print(f"{e.name}: d_lambda = {e.d_lambda * 1e9:+.3g} nm, eta = {e.eta:.4f}")
    if g.transmittance is not None:
        t = g.transmittance
        value = gr.transmittance_stack(gr.LayerStack(t.t_glass, t.t_layer, t.n_layers))
        hio.write_csv(out / "transmittance.csv", ["t_glass", "t_layer", "n_layers", "transmittance"],
                      [(t.t_glass, t.t_layer, t.n_layers, value)])
        written.append("transmittance.csv")
        manifest["transmittance"] = repr(value)
        print(f"transmittance = {value:.4f}")
    manifest["outputs"] = ", ".join(written)
    hio.write_manifest(out / "manifest.txt", manifest)
    return EXIT_OK


def _fills_window(field, level: float = 0.01) -> bool:
    """True when the window border carries a sizeable share of the mean intensity."""
    I = field.intensity
    border = np.concatenate([I[0], I[-1], I[1:-1, 0], I[1:-1, -1]])
    return bool(I.mean() > 0 and border.mean() > level * I.mean())


def cmd_propagate(args) -> int:
    field = hio.read_field(args.input)
    z = args.z_cm * CM
    if args.method == "asm":
        # a field that does not fall off at the border is read as one period
        # of a periodic field; zero padding would turn it into an aperture
        boundary = args.boundary
        if boundary == "auto":
            boundary = "periodic" if _fills_window(field) else "pad"
        print(f"boundary = {boundary}")
        out = propagate_asm(field, z, pad=boundary == "pad",
                            override_sampling=args.override_sampling,
                            workers=args.threads if args.threads > 1 else None)
    else:
        out = propagate_direct(field, z)
    hio.write_field(args.output, out)
    e0, e1 = energy(field), energy(out)
    print(f"energy before = {e0!r}")
    print(f"energy after  = {e1!r}")
    print(f"relative change = {(e1 - e0) / e0 if e0 else 0.0:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration (default: built-in desk preset)")
    common.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and the config)")
    common.add_argument("--seed", type=int, help="seed for the random diffuser phase; "
                        "switches the random phase on")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument("--override-sampling", action="store_true",
                        help="continue when a sampling check fails")

    p = argparse.ArgumentParser(
        prog="holohud", description=__doc__,
        epilog=f"environment: {OUT_ENV} sets the output directory when --out is not given",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("design", parents=[common], help="paraxial design report and FOV/eye-box sweep")
    sub.add_parser("simulate", parents=[common], help="multi-plane reconstruction and focus scan")
    sub.add_parser("grating", parents=[common], help="volume-grating detuning and efficiency")
    pp = sub.add_parser("propagate", parents=[common], help="propagate a raw complex field file")
    pp.add_argument("input", help="input field file")
    pp.add_argument("output", help="output field file")
    pp.add_argument("--z-cm", type=float, required=True, help="propagation distance [cm]")
    pp.add_argument("--method", choices=("asm", "direct"), default="asm")
    pp.add_argument("--boundary", choices=("auto", "pad", "periodic"), default="auto",
                    help="asm only: zero-pad 2x, or treat the window as periodic; auto picks "
                         "periodic when the field does not fall off at the window border")
    return p


_COMMANDS = {"design": cmd_design, "simulate": cmd_simulate, "grating": cmd_grating,
             "propagate": cmd_propagate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return _COMMANDS[args.command](args)
    except SamplingError as exc:
        print(f"sampling error: {exc}", file=sys.stderr)
        if exc.diagnostics is not None:
            print(f"diagnostics: {exc.diagnostics}", file=sys.stderr)
        return EXIT_SAMPLING
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
