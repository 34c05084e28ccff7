#!/usr/bin/env python3
"""Regenerate the golden files under tests/goldens/.

Goldens pin down byte-level determinism of the deformed-grid renders and
the CLI report:

- grid_true_<kind>.pgm   render of each fixture's exact displacement
- grid_fold.pgm          render of the folding field u1 = -2x (crossing lines)
- grid_gc_gaussian_shift.pgm, report_gc_gaussian_shift.json
                         outputs of a full gc CLI run on the shipped fixture

Report goldens are normalized: the wall-clock field and the output
directory are zeroed, since neither can reproduce across runs.  Regenerate
only on an intentional behavior change, and review the diff.

Usage: python3 scripts/make_goldens.py
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from curvreg.cli import run_cli
from curvreg.fields import ScalarField, VectorField2
from curvreg.fixtures import FIXTURE_KINDS, make_fixture
from curvreg.imgio import save_pgm
from curvreg.render import render_deformed_grid

GOLDEN_DIR = Path(__file__).resolve().parent.parent / "tests" / "goldens"


def normalize_report(report: dict) -> dict:
    report["row"]["time_s"] = 0.0
    report["config"]["output_dir"] = ""
    return report


def fold_field(n: int = 48) -> VectorField2:
    """A localized fold: a strong Gaussian pull toward the center whose
    Jacobian goes negative there, so grid lines visibly cross on canvas."""
    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    c = n / 2.0
    sigma = n / 8.0
    bump = np.exp(-((xx - c) ** 2 + (yy - c) ** 2) / (2.0 * sigma**2))
    return VectorField2(ScalarField(-3.0 * (xx - c) * bump),
                        ScalarField(np.zeros((n, n))))


def main() -> int:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)

    for kind in FIXTURE_KINDS:
        pair = make_fixture(kind, 64)
        grid = render_deformed_grid(pair.u_true, stride=4)
        save_pgm(grid, GOLDEN_DIR / f"grid_true_{kind}.pgm")

    save_pgm(render_deformed_grid(fold_field(), stride=4),
             GOLDEN_DIR / "grid_fold.pgm")

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "run"
        code = run_cli(["--model", "gc", "--fixture", "gaussian_shift",
                        "--size", "64", "--out", str(out)])
        if code != 0:
            print(f"gc run failed with exit code {code}", file=sys.stderr)
            return 1
        report = normalize_report(json.loads((out / "report.json").read_text()))
        (GOLDEN_DIR / "report_gc_gaussian_shift.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n")
        shutil.copyfile(out / "grid.pgm",
                        GOLDEN_DIR / "grid_gc_gaussian_shift.pgm")

    for path in sorted(GOLDEN_DIR.iterdir()):
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
