import subprocess
import sys

import pytest

from mlh_harness.shapes import make_shapes


def run_gridshape(*args):
    """Invoke the producing CLI; the harness talks to it only through
    files and this command line."""
    proc = subprocess.run(
        [sys.executable, "-m", "gridshape.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise AssertionError(
            f"gridshape {' '.join(map(str, args))} failed "
            f"({proc.returncode}):\n{proc.stderr}"
        )
    return proc


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Three shapes per class converted at low resolution, zring:2."""
    root = tmp_path_factory.mktemp("tiny")
    shapes = root / "shapes"
    make_shapes(shapes, per_class=3, seed=11)
    out = root / "converted"
    run_gridshape(
        "convert", "--input", shapes, "--output", out,
        "--views", "zring:2", "--res", "16", "--layers", "4",
        "--points", "600", "--seed", "3",
    )
    return out
