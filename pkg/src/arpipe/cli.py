"""
Command line entry point.

Subcommands::

    arpipe convert INPUT... --out model.glb [flags]
    arpipe inspect FILE
    arpipe page MODEL --title TITLE [--out-dir DIR] [--base-url URL]
    arpipe synth {continuum,shell,beam} OUTDIR

Exit codes: 0 success, 1 usage error, 2 data error.  Failures print a
single line ``error: <code>: <detail>`` on stderr.
"""
from __future__ import annotations

import argparse
import glob
import html
import logging
import os
import re
import string
import sys
import urllib.parse
from importlib import resources
from typing import List, Optional, Sequence

import numpy as np

from . import __version__, synthetic, vtk
from .colormap import DEFAULT_COLORMAP, RangeSpec, builtin_colormaps
from .errors import EmptySeries, InvalidParameter, MissingModel, PipelineError, UnknownFormat
from .gltf import summarize_glb, validate_glb
from .mesh import DEFAULT_FIT_SIZE
from .pipeline import ConvertOptions, atomic_write, convert, sniff_format
from .ply import read_ply
from .surface import DEFAULT_TUBE_SIDES

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# helpers


def natural_key(path: str):
    return [int(tok) if tok.isdigit() else tok.lower() for tok in re.split(r"(\d+)", path)]


def expand_inputs(patterns: Sequence[str], sort_natural: bool = False) -> List[str]:
    """Expand glob patterns in the given order; literal paths pass through."""
    paths: List[str] = []
    for pattern in patterns:
        if glob.has_magic(pattern):
            matches = sorted(glob.glob(pattern))
            if not matches:
                raise EmptySeries(f"pattern {pattern!r} matched no files")
            paths.extend(matches)
        else:
            paths.append(pattern)
    if not paths:
        raise EmptySeries("no input files")
    if sort_natural:
        paths.sort(key=natural_key)
    for p in paths:
        if not os.path.isfile(p):
            raise EmptySeries(f"input file {p!r} does not exist")
    return paths


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


def read_config(path: str, parser: argparse.ArgumentParser) -> List[str]:
    """Turn a ``key=value`` file into argument tokens for ``parser``.

    Keys are flag names without the leading dashes (``decimate=0.5``,
    ``beam-radius=0.02`` or ``beam_radius=0.02``).  The tokens are placed
    before the real arguments so anything given on the command line wins.
    """
    flags = {}
    for action in parser._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                flags[opt[2:]] = action
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror}")
    tokens: List[str] = []
    for n, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        action = flags.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"{path}:{n}: unknown config key {key!r}")
        if action.nargs == 0:
            if value.lower() in _TRUE:
                tokens.append("--" + key)
            elif value.lower() not in _FALSE:
                raise UsageError(f"{path}:{n}: {key} expects true/false, got {value!r}")
        else:
            tokens += ["--" + key, value]
    return tokens


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not np.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _ratio(text: str) -> float:
    value = _positive_float(text)
    if value > 1:
        raise argparse.ArgumentTypeError(f"ratio must lie in (0, 1], got {text!r}")
    return value


def _sides(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 3:
        raise argparse.ArgumentTypeError("need at least 3 sides")
    return value


def _range(text: str) -> RangeSpec:
    try:
        return RangeSpec.parse(text)
    except (InvalidParameter, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _field(text: str):
    name, _, comp = text.partition(":")
    if not name:
        raise argparse.ArgumentTypeError("empty field name")
    if comp and comp not in ("x", "y", "z", "mag"):
        raise argparse.ArgumentTypeError(f"component must be x, y, z or mag, got {comp!r}")
    return name, comp or None


# --------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    parser = _Parser(prog="arpipe", description="Convert simulation results into AR-ready glTF assets.")
    parser.add_argument("--version", action="version", version=f"arpipe {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress stage lines")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    c = sub.add_parser("convert", help="VTK/PLY frames -> GLB")
    c.add_argument("inputs", nargs="+", metavar="INPUT", help="files or glob patterns")
    c.add_argument("--out", required=True, metavar="PATH", help="output .glb")
    c.add_argument("--field", type=_field, metavar="NAME[:x|y|z|mag]", help="point or cell field to color by")
    c.add_argument("--colormap", default=DEFAULT_COLORMAP, metavar="NAME|FILE",
                   help=f"one of {', '.join(builtin_colormaps())} or a 't r g b' file")
    c.add_argument("--range", type=_range, default=RangeSpec(), metavar="global|perframe|MIN:MAX")
    c.add_argument("--decimate", type=_ratio, default=1.0, metavar="RATIO", help="target triangle ratio")
    c.add_argument("--solidify", type=_positive_float, metavar="THICKNESS",
                   help="shell thickness (default: 1%% of the bounding-box diagonal for shell-only grids)")
    c.add_argument("--no-solidify", action="store_true", help="render shells as single-sided surfaces")
    c.add_argument("--beam-radius", type=_positive_float, metavar="R",
                   help="tube radius for line cells (default: 2%% of the diagonal)")
    c.add_argument("--beam-sides", type=_sides, default=DEFAULT_TUBE_SIDES, metavar="N")
    c.add_argument("--animate", choices=("stop", "morph"), help="animation encoding for series")
    c.add_argument("--interp", choices=("step", "linear"), default="step")
    c.add_argument("--fps", type=_positive_float, default=10.0, metavar="F")
    c.add_argument("--fit", type=float, default=DEFAULT_FIT_SIZE, metavar="SIZE_M",
                   help="largest extent in meters (0 keeps simulation units)")
    c.add_argument("--up", choices=("y", "z"), default="y", help="simulation up axis")
    c.add_argument("--unlit", action="store_true", help="emissive-style material (no shading)")
    c.add_argument("--ply-out", metavar="PATH", help="also write PLY ({i} expands to the frame index)")
    c.add_argument("--sort-natural", action="store_true", help="numeric-aware input ordering")
    c.add_argument("--workers", type=int, default=min(4, os.cpu_count() or 1), metavar="N")
    c.add_argument("--config", metavar="PATH", help="key=value defaults; flags override")

    i = sub.add_parser("inspect", help="describe a VTK, PLY or GLB file")
    i.add_argument("path")

    p = sub.add_parser("page", help="write an AR viewer page for a model")
    p.add_argument("model")
    p.add_argument("--title", default=None)
    p.add_argument("--out-dir", default=None, help="directory of the page (default: next to the model)")
    p.add_argument("--name", default="index.html", help="page file name")
    p.add_argument("--base-url", default=None, help="public URL of the page directory")

    s = sub.add_parser("synth", help="write synthetic example series")
    s.add_argument("kind", choices=("continuum", "shell", "beam"))
    s.add_argument("outdir")
    s.add_argument("--frames", type=int, default=10)
    s.add_argument("--binary", action="store_true")
    return parser


# --------------------------------------------------------------------------
# commands


def cmd_convert(args, out) -> int:
    name, component = args.field if args.field else (None, None)
    opts = ConvertOptions(
        out=args.out,
        field=name,
        component=component,
        colormap=args.colormap,
        range=args.range,
        decimate=args.decimate,
        solidify=args.solidify,
        auto_solidify=not args.no_solidify,
        beam_radius=args.beam_radius,
        beam_sides=args.beam_sides,
        animate=args.animate,
        interp=args.interp,
        fps=args.fps,
        fit=args.fit,
        up=args.up,
        unlit=args.unlit,
        ply_out=args.ply_out,
        workers=max(1, args.workers),
    )
    paths = expand_inputs(args.inputs, args.sort_natural)
    convert(paths, opts, stage=lambda line: out(line))
    return EXIT_OK


def _fmt_range(values: np.ndarray) -> str:
    if values.size == 0:
        return "empty"
    return f"{np.nanmin(values):.6g} .. {np.nanmax(values):.6g}"


def inspect_lines(path: str) -> List[str]:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise UnknownFormat(f"cannot read {path!r}: {exc.strerror}")
    kind = sniff_format(data[:64])
    if kind == "vtk":
        grid = vtk.parse_vtk(data)
        lines = ["format: VTK legacy", grid.describe()]
        for name in vtk.field_names(grid):
            lines.append(f"  {name}: {_fmt_range(vtk.select_field(grid, name))}")
        return lines
    if kind == "ply":
        mesh = read_ply(data)
        return [
            "format: PLY",
            f"{mesh.n_vertices} vertices, {mesh.n_triangles} triangles, "
            f"colors: {'yes' if mesh.colors is not None else 'no'}",
        ]
    info = summarize_glb(data)
    report = validate_glb(data)
    lines = [
        "format: GLB",
        f"meshes: {info['meshes']}, vertices: {info['vertices']}, triangles: {info['triangles']}, "
        f"colors: {'yes' if info['colors'] else 'no'}",
    ]
    if info["mode"] == "morph":
        lines.append(f"morph targets: {info['morph_targets']}, duration {info['duration']:.1f} s")
    elif info["mode"] != "static":
        lines.append(f"stop-motion frames: {info['meshes']}, duration {info['duration']:.1f} s")
    else:
        lines.append("animation: none")
    lines.append("validation: ok" if report.ok else f"validation: {len(report.violations)} violation(s)")
    lines += [f"  {v}" for v in report.violations]
    return lines


def cmd_inspect(args, out) -> int:
    for line in inspect_lines(args.path):
        out(line)
    return EXIT_OK


def render_page(model_href: str, title: str) -> str:
    template = resources.files("arpipe").joinpath("templates/viewer.html").read_text(encoding="utf-8")
    return string.Template(template).substitute(
        title=html.escape(title, quote=True),
        model=html.escape(model_href, quote=True),
    )


def cmd_page(args, out) -> int:
    if not os.path.isfile(args.model):
        raise MissingModel(f"model {args.model!r} does not exist")
    out_dir = args.out_dir or os.path.dirname(os.path.abspath(args.model))
    rel = os.path.relpath(os.path.abspath(args.model), os.path.abspath(out_dir))
    href = urllib.parse.quote(rel.replace(os.sep, "/"))
    title = args.title or os.path.splitext(os.path.basename(args.model))[0]
    page_path = os.path.join(out_dir, args.name)
    atomic_write(page_path, render_page(href, title).encode("utf-8"))
    out(f"page: {page_path}")
    if args.base_url:
        out(f"qr-url: {args.base_url.rstrip('/')}/{urllib.parse.quote(args.name)}")
    else:
        out(f"qr-url: <base-url>/{urllib.parse.quote(args.name)} (pass --base-url for a complete link)")
    return EXIT_OK


def cmd_synth(args, out) -> int:
    if args.frames < 1:
        raise UsageError("--frames must be at least 1")
    if args.kind == "continuum":
        grids = synthetic.bending_series(args.frames)
    elif args.kind == "shell":
        grids = synthetic.bulge_series(args.frames)
    else:
        grids = synthetic.fiber_series(args.frames)
    for i, grid in enumerate(grids):
        path = os.path.join(args.outdir, f"frame_{i:03d}.vtk")
        atomic_write(path, vtk.write_vtk(grid, binary=args.binary, title=f"{args.kind} frame {i}"))
        out(path)
    return EXIT_OK


COMMANDS = {"convert": cmd_convert, "inspect": cmd_inspect, "page": cmd_page, "synth": cmd_synth}


class _WarningHandler(logging.Handler):
    def __init__(self, stream):
        super().__init__(logging.WARNING)
        self.stream = stream

    def emit(self, record):
        print(f"warning: {record.getMessage()}", file=self.stream)


def _with_config(argv: List[str], parser: _Parser) -> List[str]:
    """Splice ``--config`` defaults in right after the ``convert`` token."""
    if "convert" not in argv:
        return argv
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return argv
    convert_parser = parser._subparsers._group_actions[0].choices["convert"]
    at = argv.index("convert") + 1
    return argv[:at] + read_config(known.config, convert_parser) + argv[at:]


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    handler = _WarningHandler(stderr)
    logger = logging.getLogger("arpipe")
    logger.addHandler(handler)
    try:
        args = parser.parse_args(_with_config(argv, parser))
        quiet = args.quiet

        def out(line):
            if not (quiet and line.startswith("stage:")):
                print(line, file=stdout)

        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=stderr)
        return EXIT_USAGE
    except InvalidParameter as exc:
        print(f"error: {exc.code}: {exc}", file=stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"error: {exc.code}: {exc}", file=stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: IOError: {exc.filename or ''}: {exc.strerror or exc}", file=stderr)
        return EXIT_DATA
    finally:
        logger.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
