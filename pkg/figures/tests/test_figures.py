"""End-to-end figure tests.

The fixtures come from running the primary `salab` CLI as a subprocess
(its external interface); the figure package itself only reads the CSVs.
"""

import subprocess


import numpy as np
import pytest

from salab_figures import (SchemaError, plot_acf, plot_convergence,
                           plot_phase_diagram, plot_sample_grid, plot_spectrum)
from salab_figures.cli import main


def salab(*args):
    proc = subprocess.run(["salab"] + [str(a) for a in args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    salab("spectrum", "--seed", 1, "--d", 16, "--k", 4, "--beta-count", 8,
          "--steps", 400, "--burn-in", 100, "--out-dir", root / "spectrum")
    salab("phase-diagram", "--seed", 2, "--d", 16, "--load-count", 4,
          "--beta-count", 5, "--datasets", 1, "--steps", 300, "--burn-in", 100,
          "--out-dir", root / "phase")
    salab("converge", "--seed", 3, "--steps", 2000, "--burn-in", 500,
          "--ref-steps", 6000, "--ref-burn-in", 1000, "--out-dir", root / "conv")
    matrix = root / "returns.csv"
    rs = np.random.default_rng(0)
    rows = ["%s" % ",".join(repr(float(v)) for v in row)
            for row in rs.normal(size=(80, 6)) * 0.01]
    matrix.write_text("\n".join(rows) + "\n")
    salab("sequential", "--seed", 4, "--matrix", matrix, "--beta", "0.5",
          "--alpha", "0.05", "--t-inner", 40, "--days", 60,
          "--out-dir", root / "seq")
    return root


def test_spectrum_figure(runs, tmp_path):
    png, pdf = plot_spectrum(runs / "spectrum" / "spectrum.csv",
                             tmp_path / "spectrum")
    assert png.exists() and pdf.exists()
    assert png.stat().st_size > 0


def test_phase_diagram_figure(runs, tmp_path):
    png, pdf = plot_phase_diagram(runs / "phase" / "phase_diagram.csv",
                                  tmp_path / "phase")
    assert png.exists() and pdf.exists()


def test_convergence_overlay(runs, tmp_path):
    png, pdf = plot_convergence(runs / "conv" / "chain_energies.csv",
                                runs / "conv" / "reference_energies.csv",
                                tmp_path / "conv",
                                summary_csv=runs / "conv" / "summary.csv")
    assert png.exists() and pdf.exists()


def test_acf_panels(runs, tmp_path):
    png, pdf = plot_acf(runs / "seq" / "acf.csv", tmp_path / "acf")
    assert png.exists() and pdf.exists()


def test_sample_grid(tmp_path):
    # build a sample CSV in the documented layout: chain, step, then pixels
    rs = np.random.default_rng(1)
    d = 36
    header = "chain,step," + ",".join("x%d" % i for i in range(d))
    lines = [header]
    for i in range(20):
        vals = rs.uniform(size=d)
        lines.append("%d,%d," % (i // 5, 100 * i)
                     + ",".join(repr(float(v)) for v in vals))
    csv = tmp_path / "samples.csv"
    csv.write_text("\n".join(lines) + "\n")
    png, pdf = plot_sample_grid(csv, 6, 6, tmp_path / "grid")
    assert png.exists() and pdf.exists()
    with pytest.raises(SchemaError, match="does not match"):
        plot_sample_grid(csv, 5, 5, tmp_path / "bad")


def test_schema_errors_name_expected_columns(runs, tmp_path):
    with pytest.raises(SchemaError, match="expected"):
        plot_spectrum(runs / "phase" / "phase_diagram.csv", tmp_path / "x")
    with pytest.raises(SchemaError, match="not found"):
        plot_spectrum(tmp_path / "missing.csv", tmp_path / "x")


def test_cli_entry_point(runs, tmp_path):
    rc = main(["spectrum", str(runs / "spectrum" / "spectrum.csv"),
               "--out", str(tmp_path / "fig")])
    assert rc == 0
    assert (tmp_path / "fig.png").exists()
    rc = main(["spectrum", str(runs / "phase" / "phase_diagram.csv"),
               "--out", str(tmp_path / "bad")])
    assert rc == 1


def test_rendering_is_deterministic(runs, tmp_path):
    a, _ = plot_spectrum(runs / "spectrum" / "spectrum.csv", tmp_path / "a")
    b, _ = plot_spectrum(runs / "spectrum" / "spectrum.csv", tmp_path / "b")
    assert a.read_bytes() == b.read_bytes()
