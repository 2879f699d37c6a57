"""Command-line driver.

    gaugecavity <surfaces|evolve|wilson|validate|info> --config <path|preset>
                [--out <path>] [--threads <n>] [--raw-populations]

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 validation failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import validation
from .config import RunConfig, preset_names
from .errors import ConfigError, NumericalError, ValidationError
from .field import atomic_write_text, grid_csv_text, initial_state
from .gauge import geometric_phase_matrix, wilson_loop
from .model import (
    ModelKind,
    classify_intersection,
    gauge_potentials,
    lambda_reference_scalar_potential,
    sombrero_analysis,
    surface_values,
    verify_gauge_decomposition,
)
from .propagator import evolve

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3
THREADS_ENV = "GAUGECAVITY_THREADS"

log = logging.getLogger("gaugecavity")


def _fmt(x):
    return repr(float(x))


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            atomic_write_text(out, text)
        except OSError as exc:
            raise ConfigError(f"cannot write {out}: {exc}") from None


def _provenance(cfg):
    return f"# config_sha256={cfg.sha256()}\n"


def _report(lines, to_stderr):
    stream = sys.stderr if to_stderr else sys.stdout
    for line in lines:
        print(line, file=stream)


def _matrix_text(m, indent="    "):
    rows = []
    for row in np.atleast_2d(m):
        rows.append(indent + "[" + ", ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in row) + "]")
    return rows


# --- summaries shared by surfaces and info ---------------------------------


def _sombrero_lines(spec):
    if spec.kind is not ModelKind.BIMODAL_RABI:
        return ["sombrero: not applicable to this model"]
    s = sombrero_analysis(spec)
    closed = "none" if s.r_min_closed_form is None else f"{s.r_min_closed_form:.8f}"
    return [
        f"sombrero: {'yes' if s.has_sombrero else 'no'}",
        f"  r_min = {s.r_min:.8f} (closed form {closed}), depth = {s.depth:.6e} rad/ns",
        f"  derived condition g^2 > omega*Omega/2: {s.derived_condition}",
        f"  quoted condition g > sqrt(omega*Omega): {s.literature_condition}",
    ]


def _classification_lines(spec):
    if spec.coupling_g == 0:
        return ["intersections: g = 0, surfaces are uncoupled paraboloids"]
    report = classify_intersection(spec)
    lines = ["intersections:"]
    for pair in report.pairs:
        locs = "; ".join(f"({a:.6f}, {b:.6f})" for a, b in pair.locations)
        lines.append(f"  surfaces {pair.lower}-{pair.lower + 1}: {pair.kind.value} at {locs}, "
                     f"min gap {pair.min_gap:.3e}")
    return lines


# --- commands ---------------------------------------------------------------


def cmd_surfaces(cfg, out=None, workers=None, **_):
    spec = cfg.model_spec()
    p_max, n = cfg.get("surfaces.p_max"), cfg.get("surfaces.n")
    axis = np.linspace(-p_max, p_max, n)
    if spec.n_modes == 1:
        p1, p2 = axis, np.zeros_like(axis)
    else:
        p1, p2 = (m.ravel() for m in np.meshgrid(axis, axis, indexing="ij"))
    vals = surface_values(spec, p1, p2)
    cols = ["p1", "p2"] + [f"v{k + 1}" for k in range(spec.internal_dim)]
    lines = [_provenance(cfg).rstrip("\n"), ",".join(cols)]
    for i in range(len(p1)):
        lines.append(",".join([_fmt(p1[i]), _fmt(p2[i])] + [_fmt(v) for v in vals[i]]))
    _emit("\n".join(lines) + "\n", out)
    _report(_sombrero_lines(spec) + _classification_lines(spec), to_stderr=out is None)
    return EXIT_OK


def evolve_header(spec):
    pops = [f"p{k + 1}" for k in range(spec.internal_dim)]
    quad = []
    for k in range(spec.n_modes):
        quad += [f"x{k + 1}", f"p{k + 1}q"]
    return ["t_ns", "norm2"] + pops + ["W"] + quad


def trajectory_csv(cfg, spec, rec):
    lines = [_provenance(cfg).rstrip("\n"), ",".join(evolve_header(spec))]
    for i, t in enumerate(rec.times):
        row = [_fmt(t), _fmt(rec.norm2[i])]
        row += [_fmt(p) for p in rec.populations[i]]
        row.append(_fmt(rec.inversion[i]))
        for k in range(spec.n_modes):
            row += [_fmt(rec.x_mean[i, k]), _fmt(rec.p_mean[i, k])]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def run_evolve(cfg, workers=None, raw_populations=None):
    spec = cfg.model_spec()
    grid = cfg.grid(spec.n_modes)
    state = initial_state(spec, grid, cfg.atomic_amplitudes(spec.internal_dim), cfg.centers(spec.n_modes))
    pcfg = cfg.propagator_config(raw_populations)
    pcfg.workers = workers
    return spec, evolve(state, spec, pcfg)


def cmd_evolve(cfg, out=None, workers=None, raw_populations=None, dump_state=None, **_):
    spec, rec = run_evolve(cfg, workers, raw_populations)
    _emit(trajectory_csv(cfg, spec, rec), out)
    if dump_state:
        _emit(grid_csv_text(rec.final_state, comment=f"config_sha256={cfg.sha256()}"), dump_state)
    return EXIT_OK


def cmd_wilson(cfg, out=None, **_):
    spec = cfg.model_spec()
    if spec.n_modes != 2:
        raise ConfigError("Wilson loops need a two-mode model (BimodalRabi or BimodalLambda)")
    loop = cfg.loop_spec()
    result = wilson_loop(spec, loop)
    phase = geometric_phase_matrix(spec, loop)
    lines = [_provenance(cfg).rstrip("\n"), "quantity,n_segments,row,col,re,im"]
    blocks = (("holonomy", result.n_segments, result.holonomy),
              ("holonomy", loop.n_segments, result.coarse),
              ("phase_matrix", phase.n_segments, phase.matrix))
    for name, nseg, m in blocks:
        for (i, j), z in np.ndenumerate(m):
            lines.append(f"{name},{nseg},{i},{j},{_fmt(z.real)},{_fmt(z.imag)}")
    lines.append(f"unitarity_residue,{result.n_segments},,,{_fmt(result.unitarity_residue)},0.0")
    lines.append(f"convergence_estimate,{result.n_segments},,,{_fmt(result.convergence_estimate)},0.0")
    lines.append(f"phase_convergence_estimate,{phase.n_segments},,,{_fmt(phase.convergence_estimate)},0.0")
    _emit("\n".join(lines) + "\n", out)

    u = result.holonomy
    off = u - np.diag(np.diag(u))
    g = phase.matrix
    g_off = g - np.diag(np.diag(g))
    summary = [
        f"holonomy ({result.n_segments} segments):",
        *_matrix_text(u),
        f"  max |diagonal| = {np.abs(np.diag(u)).max():.6f}, max |off-diagonal| = {np.abs(off).max():.6f}",
        f"  unitarity residue = {result.unitarity_residue:.3e}, "
        f"convergence estimate (n vs 2n) = {result.convergence_estimate:.3e}",
    ]
    if u.shape[0] == 1:
        summary.append(f"  phase = {math.atan2(u[0, 0].imag, u[0, 0].real):+.8f} rad")
    summary += [
        f"geometric phase matrix ({phase.n_segments} segments):",
        *_matrix_text(g),
        f"  max |diagonal| = {np.abs(np.diag(g)).max():.6f}, max |off-diagonal| = {np.abs(g_off).max():.6f}",
        f"  convergence estimate (n vs 2n) = {phase.convergence_estimate:.3e}",
    ]
    _report(summary, to_stderr=out is None)
    return EXIT_OK


def cmd_validate(cfg, out=None, **_):
    checks = validation.run_suite(cfg)
    table = validation.format_table(checks)
    if out is not None:
        _emit(_provenance(cfg) + table, out)
    sys.stdout.write(table)
    sys.stdout.flush()
    failed = [c.name for c in checks if not c.passed]
    if failed:
        raise ValidationError("failed checks: " + ", ".join(failed))
    return EXIT_OK


def cmd_info(cfg, out=None, **_):
    spec = cfg.model_spec()
    gauge = gauge_potentials(spec)
    lines = [f"model: {spec.kind.value}", "parameters (rad/ns):"]
    for name, value in (("omega", spec.omega), ("g", spec.coupling_g), ("Omega", spec.atom_splitting),
                        ("kappa", spec.kappa), ("gamma", spec.gamma)):
        lines.append(f"  {name:6s} = {value:.9g}")
    if spec.kind is ModelKind.BIMODAL_LAMBDA:
        lines.append("  E1, E2, E3 = " + ", ".join(f"{e:.9g}" for e in spec.atomic_energies))
    ghz = sorted(k for k in cfg.values if k.endswith("_ghz"))
    if ghz:
        lines.append("unit conversions (GHz -> rad/ns, omega = 2 pi f):")
        for key in ghz:
            lines.append(f"  {key} = {cfg.values[key]!r} GHz -> {2.0 * math.pi * cfg.values[key]:.9g} rad/ns")
    period = 2.0 * math.pi / spec.omega
    lines.append(f"orbit period 2 pi/omega = {period:.6g} ns; six roundtrips = {6.0 * period:.6g} ns")
    lines.append(f"is_abelian = {str(gauge.is_abelian).lower()}")
    for (i, j), c in gauge.commutators().items():
        lines.append(f"[A{i + 1}, A{j + 1}] =")
        lines += _matrix_text(c)
    lines.append("scalar potential Phi (derived, completes the square):")
    lines += _matrix_text(gauge.scalar_potential)
    lines.append(f"  decomposition residual at p=(0.7, -0.4): "
                 f"{verify_gauge_decomposition(spec, 0.7, -0.4):.3e}")
    if spec.kind is ModelKind.BIMODAL_LAMBDA:
        ref = lambda_reference_scalar_potential(spec)
        lines.append("quoted scalar potential (g^2/3omega)(1 - (sqrt3/2) lambda8):")
        lines += _matrix_text(ref)
        lines.append(f"  decomposition residual with quoted Phi: "
                     f"{verify_gauge_decomposition(spec, 0.7, -0.4, ref):.3e}")
    lines += _sombrero_lines(spec)
    lines += _classification_lines(spec)
    text = "\n".join(lines) + "\n"
    if out is not None:
        _emit(_provenance(cfg) + text, out)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "surfaces": cmd_surfaces,
    "evolve": cmd_evolve,
    "wilson": cmd_wilson,
    "validate": cmd_validate,
    "info": cmd_info,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="gaugecavity", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="config file or bundled preset name "
                        f"({', '.join(preset_names())}); validate defaults to rabi_validate")
    parser.add_argument("--out", help="output file (default: standard output)")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"FFT worker threads (also read from ${THREADS_ENV}); never changes results")
    parser.add_argument("--raw-populations", action="store_true", default=None,
                        help="report populations without dividing by the norm")
    parser.add_argument("--dump-state", help="evolve: also write the final grid state as CSV")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _threads(arg):
    if arg is not None:
        n = arg
    elif os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError:
            raise ConfigError(f"${THREADS_ENV} must be an integer") from None
    else:
        return None
    if n < 1:
        raise ConfigError("thread count must be >= 1")
    return n


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config_path = args.config
        if config_path is None:
            if args.command != "validate":
                raise ConfigError("--config is required")
            config_path = "rabi_validate"
        cfg = RunConfig.load(config_path)
        workers = _threads(args.threads)
        return COMMANDS[args.command](cfg, out=args.out, workers=workers,
                                      raw_populations=args.raw_populations, dump_state=args.dump_state)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        # parameter combinations rejected downstream (grid too small, dt unstable, ...)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
