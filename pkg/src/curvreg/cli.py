"""Batch command-line driver.

Loads (or synthesizes) a template/reference image pair, runs the selected
registration model, and writes the warped template, before/after difference
images, a deformed-grid render, and a machine-readable report into the
output directory.  One registration per process; exit codes: 0 success,
2 bad arguments or unreadable input, 3 solver abort.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .baselines import (
    DemonConfig,
    TimeMarchConfig,
    register_demon,
    register_lc,
    register_mc,
)
from .errors import (
    CorruptFileError,
    NonFiniteError,
    SingularBlockError,
    UnsupportedFormatError,
)
from .fields import ScalarField, sample_warped
from .fixtures import FIXTURE_KINDS, make_fixture
from .imgio import load_image, save_pgm
from .render import render_deformed_grid
from .solver_gc import RegistrationConfig, register_gc

__all__ = [
    "MODEL_DEFAULTS",
    "ReportRow",
    "RunConfigFile",
    "build_parser",
    "run_cli",
    "main",
]

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_SOLVER_ABORT = 3

MODELS = ("gc", "lc", "mc", "demon")

# Solvers operate on intensities in [0, 1]: the default step sizes and
# penalty weights below are tuned for that range, and the quality metric
# epsilon is a ratio of SSD values, so it is unchanged by the rescale.
# Images load as [0, 255] and outputs are written back on that scale.
_DISPLAY_SCALE = 255.0

MODEL_DEFAULTS: dict[str, object] = {
    "gc": RegistrationConfig(),
    "lc": TimeMarchConfig(gamma=1e-2, dt=5.0, max_iter=200, tol=1e-4),
    "mc": TimeMarchConfig(gamma=1e-2, dt=5.0, max_iter=300, tol=1e-4),
    "demon": DemonConfig(noise_ratio=0.01),
}

_RUNNERS = {
    "gc": register_gc,
    "lc": register_lc,
    "mc": register_mc,
    "demon": register_demon,
}


@dataclass(frozen=True)
class ReportRow:
    """One line of the quantitative report.

    For the demon model the ``gamma`` column carries the noise ratio (its
    only strength-like knob); ``r`` is 0.0 for models without an augmented
    Lagrangian penalty.
    """

    model: str
    gamma: float
    r: float
    time_s: float
    epsilon: float
    min_jac: float
    iterations: int


@dataclass(frozen=True)
class RunConfigFile:
    """The fully resolved run configuration echoed into every report.

    ``solver`` holds every field of the active model's config dataclass.
    For synthesized inputs the path fields carry a ``fixture://kind/size``
    tag instead of filesystem paths.
    """

    template_path: str
    reference_path: str
    output_dir: str
    model: str
    solver: dict
    grid_spacing: int


class _CliError(Exception):
    """Bad arguments or unreadable input; maps to exit code 2."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvreg",
        description="Register a template image onto a reference image.",
    )
    parser.add_argument("--model", required=True, choices=MODELS,
                        help="registration model to run")
    parser.add_argument("--template", type=Path,
                        help="template image (PGM, or PNG with the png extra)")
    parser.add_argument("--reference", type=Path,
                        help="reference image (same format and size)")
    parser.add_argument("--out", type=Path, required=True,
                        help="output directory (created if missing)")
    parser.add_argument("--gamma", type=float,
                        help="regularization weight; for the demon model "
                             "this sets the noise ratio")
    parser.add_argument("--r", type=float,
                        help="augmented-Lagrangian penalty weight (gc only)")
    parser.add_argument("--omega", type=float,
                        help="Gauss-Seidel relaxation factor (gc only)")
    parser.add_argument("--tol", type=float, help="stopping tolerance")
    parser.add_argument("--max-iter", type=int, dest="max_iter",
                        help="outer iteration cap")
    parser.add_argument("--grid-spacing", type=int, dest="grid_spacing",
                        default=4,
                        help="line spacing of the deformed-grid render "
                             "(default: 4)")
    parser.add_argument("--fixture", choices=FIXTURE_KINDS,
                        help="synthesize this test pair instead of reading "
                             "--template/--reference")
    parser.add_argument("--size", type=int,
                        help="side length of the synthesized pair "
                             "(default: 64; requires --fixture)")
    parser.add_argument("--report", choices=("json", "csv"), default="json",
                        help="report format (default: json)")
    return parser


def _load_unit_image(path: Path, role: str) -> ScalarField:
    try:
        field = load_image(path)
    except FileNotFoundError:
        raise _CliError(f"{role} image not found: {path}")
    except (CorruptFileError, UnsupportedFormatError) as err:
        raise _CliError(f"cannot read {role} image {path}: {err}")
    except OSError as err:
        raise _CliError(f"cannot read {role} image {path}: {err}")
    return ScalarField(field.data / _DISPLAY_SCALE, field.spacing)


def _resolve_inputs(args: argparse.Namespace,
                    parser: argparse.ArgumentParser,
                    ) -> tuple[ScalarField, ScalarField, str, str]:
    """Produce unit-scale template/reference fields plus their path tags."""
    if args.fixture is not None:
        if args.template is not None or args.reference is not None:
            raise _CliError(
                "give either --fixture or --template/--reference, not both")
        size = 64 if args.size is None else args.size
        try:
            pair = make_fixture(args.fixture, size)
        except ValueError as err:
            raise _CliError(str(err))
        tag = f"fixture://{args.fixture}/{size}"
        return pair.template, pair.reference, tag, tag

    if args.size is not None:
        raise _CliError("--size requires --fixture")
    if args.template is None or args.reference is None:
        raise _CliError(
            "either --fixture or both --template and --reference are "
            f"required\n{parser.format_usage()}".rstrip())
    T = _load_unit_image(args.template, "template")
    R = _load_unit_image(args.reference, "reference")
    if T.shape != R.shape:
        raise _CliError(
            f"image sizes differ: template {T.shape}, reference {R.shape}")
    return T, R, str(args.template), str(args.reference)


def _resolve_config(args: argparse.Namespace):
    base = MODEL_DEFAULTS[args.model]
    overrides: dict[str, object] = {}
    if args.gamma is not None:
        key = "noise_ratio" if args.model == "demon" else "gamma"
        overrides[key] = args.gamma
    for flag in ("r", "omega"):
        value = getattr(args, flag)
        if value is None:
            continue
        if args.model != "gc":
            raise _CliError(f"--{flag} applies to the gc model only")
        overrides[flag] = value
    if args.tol is not None:
        overrides["tol"] = args.tol
    if args.max_iter is not None:
        overrides["max_iter"] = args.max_iter
    try:
        return dataclasses.replace(base, **overrides)
    except ValueError as err:
        raise _CliError(f"invalid solver settings: {err}")


def _to_display(field: ScalarField) -> ScalarField:
    return ScalarField(field.data * _DISPLAY_SCALE, field.spacing)


def _abs_diff(a: ScalarField, b: ScalarField) -> ScalarField:
    return ScalarField(abs(a.data - b.data), a.spacing)


def _write_report(out_dir: Path, fmt: str, row: ReportRow,
                  config: RunConfigFile) -> Path:
    row_dict = dataclasses.asdict(row)
    if fmt == "json":
        path = out_dir / "report.json"
        payload = {
            "schema": 1,
            "row": row_dict,
            "config": dataclasses.asdict(config),
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        path = out_dir / "report.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(row_dict))
            writer.writeheader()
            writer.writerow(row_dict)
    return path


def run_cli(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        # argparse already printed usage/help; --help exits 0, errors exit 2
        return int(exc.code or 0)

    try:
        if args.grid_spacing < 2:
            raise _CliError("--grid-spacing must be >= 2")
        T, R, template_tag, reference_tag = _resolve_inputs(args, parser)
        cfg = _resolve_config(args)
        out_dir: Path = args.out
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as err:
            raise _CliError(f"cannot create output directory {out_dir}: {err}")
    except _CliError as err:
        print(f"curvreg: error: {err}", file=sys.stderr)
        return EXIT_BAD_INPUT

    try:
        result = _RUNNERS[args.model](T, R, cfg)
    except (NonFiniteError, SingularBlockError) as err:
        print(f"curvreg: solver abort: {err}", file=sys.stderr)
        return EXIT_SOLVER_ABORT

    warped = sample_warped(T, result.u)
    save_pgm(_to_display(warped), out_dir / "warped.pgm")
    save_pgm(_to_display(_abs_diff(T, R)), out_dir / "diff_before.pgm")
    save_pgm(_to_display(_abs_diff(warped, R)), out_dir / "diff_after.pgm")
    save_pgm(render_deformed_grid(result.u, args.grid_spacing),
             out_dir / "grid.pgm")

    if args.model == "demon":
        gamma_like = cfg.noise_ratio
    else:
        gamma_like = cfg.gamma
    row = ReportRow(
        model=args.model,
        gamma=gamma_like,
        r=cfg.r if args.model == "gc" else 0.0,
        time_s=result.wall_time_s,
        epsilon=result.epsilon,
        min_jac=result.min_jac,
        iterations=result.iterations,
    )
    config = RunConfigFile(
        template_path=template_tag,
        reference_path=reference_tag,
        output_dir=str(out_dir),
        model=args.model,
        solver=dataclasses.asdict(cfg),
        grid_spacing=args.grid_spacing,
    )
    _write_report(out_dir, args.report, row, config)
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
