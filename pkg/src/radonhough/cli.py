"""Command-line front end.

Every command writes ``#``-prefixed echo lines (library version, command and
all parameters) into its CSV outputs, and no timestamps, so re-running a
command with the same flags reproduces its files byte for byte.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .convergence import bump, convergence_study, pair_grid
from .families import from_name, projection
from .formats import read_grid_csv, read_sinogram, save_grid_pgm, write_grid_csv, write_sinogram, write_table
from .grid import Discretization
from .hough import accumulate_discrete, detect_peaks
from .images import DiscreteImage, PixelImage, load_pgm, save_pgm, shepp_logan, shepp_logan_mask
from .inversion import (NOISE_GENERATOR, RASTERIZATION, ErrorReport, FilterKind, NoiseSpec, add_noise, fbp,
                        hough_invert, threshold_sweep)
from .radon import sinogram_pixel

SQRT2 = math.sqrt(2.0)


def _size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("image dimensions must be positive")
    return w, h


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fraction(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"threshold must be in [0, 1], got {v}")
    return v


def _echo(args) -> dict:
    echo = {"radonhough": __version__, "command": args.command}
    for key in sorted(vars(args)):
        if key in ("command", "func"):
            continue
        value = getattr(args, key)
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        echo[key] = value
    return echo


def _sinogram_grid(args) -> Discretization:
    return Discretization.sinogram(args.I, args.J, args.gamma_max)


def _read_image(path, size=None) -> PixelImage:
    img = load_pgm(path)
    if size is not None and (img.width, img.height) != size:
        raise ValueError(f"{path} is {img.width}x{img.height}, expected {size[0]}x{size[1]}")
    return img


# -- commands ------------------------------------------------------------------------


def cmd_phantom(args) -> int:
    w, h = args.size
    save_pgm(shepp_logan(w, h, args.table), args.output, maxval=args.maxval)
    return 0


def cmd_radon(args) -> int:
    img = _read_image(args.input)
    s = sinogram_pixel(img, _sinogram_grid(args), args.normalization, args.threads)
    write_sinogram(args.output, s, _echo(args))
    if args.pgm:
        save_grid_pgm(s.values, args.pgm)
    return 0


def cmd_noise(args) -> int:
    s = add_noise(read_sinogram(args.input), NoiseSpec(args.level, args.seed))
    echo = _echo(args)
    echo["generator"] = NOISE_GENERATOR
    write_sinogram(args.output, s, echo)
    if args.pgm:
        save_grid_pgm(s.values, args.pgm)
    return 0


def cmd_fbp(args) -> int:
    w, h = args.size
    window_ = PixelImage.on_square(np.zeros((h, w))).window
    recon = fbp(read_sinogram(args.input), FilterKind.parse(args.filter), w, h, window_, args.threads)
    save_pgm(recon, args.output, maxval=args.maxval, normalize=True)
    return 0


def cmd_hough_invert(args) -> int:
    w, h = args.size
    window_ = PixelImage.on_square(np.zeros((h, w))).window
    recon = hough_invert(read_sinogram(args.input), args.threshold, w, h, window_, args.threads)
    save_pgm(recon, args.output, maxval=args.maxval, normalize=True)
    return 0


def cmd_sweep(args) -> int:
    if args.input:
        truth = _read_image(args.input)
        mask = truth.values > 0
        mask_rule = "pixels with positive grey level"
    else:
        w, h = args.size
        truth = shepp_logan(w, h)
        mask = shepp_logan_mask(w, h)
        mask_rule = "inside the outer phantom ellipse"
    clean = sinogram_pixel(truth, _sinogram_grid(args), args.normalization, args.threads)
    reports = threshold_sweep(clean, truth, args.thresholds, args.seeds, args.level, mask, args.threads)
    echo = _echo(args)
    echo.update(generator=NOISE_GENERATOR, rasterization=RASTERIZATION, mask=mask_rule,
                rescale="min-max over masked-in pixels")
    write_table(args.output, ErrorReport.CSV_HEADER, [r.csv_row() for r in reports], echo)
    return 0


def _study_setup(args):
    if args.family == "line-angle":
        fam = from_name("line-angle")
        base = Discretization.covering((0.0, 0.0), (math.pi / args.base, 2 * SQRT2 / args.base),
                                       [(0.0, math.pi), (-SQRT2, SQRT2)])
        center, radius = (math.pi / 2, 0.0), (1.2, 1.2)
    else:
        fam = projection(args.theta)
        base = Discretization.covering((0.0,), (2 * SQRT2 / args.base,), [(-SQRT2, SQRT2)])
        center, radius = (0.0,), (1.3,)
    center = tuple(args.center) if args.center else center
    radius = tuple(args.radius) if args.radius else radius
    return fam, base, bump(center, radius, base)


def cmd_sweep_convergence(args) -> int:
    fam, base, psi = _study_setup(args)
    if args.image == "points":
        rng = np.random.default_rng(args.seed)
        img = DiscreteImage.unit(rng.uniform(-1.0, 1.0, (args.points, 2)))
        band = (1.5, 3.0)
        min_slope = None
    else:
        if fam.t != 2:
            raise ValueError("pixel-image studies need the line-angle family")
        a = args.half_side
        img = PixelImage(np.ones((1, 1)), (-a, a, -a, a))
        band = None
        min_slope = 0.9
    report = convergence_study(fam, img, psi, base, args.levels, band, min_slope)
    lines = "\n".join(f"# {k}={v}" for k, v in _echo(args).items())
    Path(args.output).write_text(lines + "\n" + report.to_csv())
    print(report.verdict())
    return 0


def _read_points(path) -> DiscreteImage:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([float(v) for v in line.split(",")])
    arr = np.array(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise ValueError(f"{path}: expected lines 'x1,x2' or 'x1,x2,weight'")
    weights = arr[:, 2] if arr.shape[1] == 3 else np.ones(len(arr))
    return DiscreteImage(arr[:, :2], weights)


def cmd_detect(args) -> int:
    fam = from_name(args.family)
    box = args.box
    if len(box) != 2 * fam.t or len(args.d) != fam.t:
        raise ValueError(f"family {fam.name} needs {fam.t} steps and {2 * fam.t} box bounds")
    star = tuple(args.lambda_star) if args.lambda_star else (0.0,) * fam.t
    disc = Discretization.covering(star, tuple(args.d), [(box[2 * k], box[2 * k + 1]) for k in range(fam.t)])
    counter = accumulate_discrete(fam, _read_points(args.input), disc)
    if args.output:
        write_grid_csv(args.output, disc, counter.values, "hough-counter", _echo(args))
    for p in detect_peaks(counter, args.k, args.min_separation):
        print(",".join(repr(float(c)) for c in p.center) + f",{p.value!r}")
    return 0


def cmd_pair(args) -> int:
    disc, values, _, _ = read_grid_csv(args.input)
    psi = bump(args.center, args.radius, disc)
    print(repr(pair_grid(SimpleNamespace(disc=disc, values=values), psi)))
    return 0


# -- parser ---------------------------------------------------------------------------


def _add_grid(p):
    p.add_argument("--I", type=int, default=629, help="number of angles in [0, pi) (default 629)")
    p.add_argument("--J", type=int, default=287, help="number of offsets (default 287)")
    p.add_argument("--gamma-max", type=float, default=SQRT2, help="offsets span [-g, g] (default sqrt 2)")
    p.add_argument("--normalization", choices=("unit-gradient", "slope"), default="unit-gradient")


def _add_threads(p):
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radonhough", description="Radon and Hough transforms on pixel grids.")
    parser.add_argument("--version", action="version", version=f"radonhough {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="write a Shepp-Logan phantom as PGM")
    p.add_argument("--size", type=_size, default=(256, 256))
    p.add_argument("--table", choices=("modified", "original"), default="modified")
    p.add_argument("--maxval", type=int, default=255)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("radon", help="exact sinogram of a PGM image")
    p.add_argument("--in", dest="input", required=True)
    _add_grid(p)
    _add_threads(p)
    p.add_argument("--pgm", help="also write a min-max normalized picture of the sinogram")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_radon)

    p = sub.add_parser("noise", help="multiplicative Gaussian noise on a sinogram")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--level", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pgm")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("fbp", help="(filtered) back-projection of a sinogram")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--filter", choices=[k.value for k in FilterKind], default="ramlak")
    p.add_argument("--size", type=_size, default=(256, 256))
    p.add_argument("--maxval", type=int, default=255)
    _add_threads(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_fbp)

    p = sub.add_parser("hough-invert", help="Hough-threshold inversion of a sinogram")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--threshold", type=_fraction, default=0.0)
    p.add_argument("--size", type=_size, default=(256, 256))
    p.add_argument("--maxval", type=int, default=255)
    _add_threads(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_hough_invert)

    p = sub.add_parser("sweep", help="error table for back-projection, FBP and Hough thresholds")
    p.add_argument("--in", dest="input", help="ground-truth PGM (default: Shepp-Logan phantom)")
    p.add_argument("--size", type=_size, default=(256, 256))
    p.add_argument("--level", type=float, default=1.0)
    p.add_argument("--seeds", type=_ints, default=[1, 2, 3, 5, 8])
    p.add_argument("--thresholds", type=_floats, default=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    _add_grid(p)
    _add_threads(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sweep-convergence", help="weak convergence of the rescaled Hough counter")
    p.add_argument("--family", choices=("line-angle", "projection"), default="line-angle")
    p.add_argument("--theta", type=float, default=0.3, help="angle of the projection family")
    p.add_argument("--image", choices=("points", "pixel"), default="points")
    p.add_argument("--points", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--half-side", type=float, default=0.1)
    p.add_argument("--base", type=int, default=64, help="coarsest steps are (pi/base, 2 sqrt 2/base)")
    p.add_argument("--levels", type=int, default=6)
    p.add_argument("--center", type=_floats)
    p.add_argument("--radius", type=_floats)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sweep_convergence)

    p = sub.add_parser("detect", help="Hough counter of a point list and its top peaks")
    p.add_argument("--in", dest="input", required=True, help="CSV lines x1,x2[,weight]")
    p.add_argument("--family", default="line-angle")
    p.add_argument("--d", type=_floats, required=True)
    p.add_argument("--box", type=_floats, required=True, help="lo1,hi1,lo2,hi2,...")
    p.add_argument("--lambda-star", type=_floats)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--min-separation", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("pair", help="pair a gridded CSV with a polynomial bump")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--center", type=_floats, required=True)
    p.add_argument("--radius", type=_floats, required=True)
    p.set_defaults(func=cmd_pair)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"radonhough {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
