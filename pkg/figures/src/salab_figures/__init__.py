"""Render figures from salab experiment CSV outputs.

The scripts are read-only over the CSVs the experiment CLI writes; no
number shown on a plot is hardcoded, and the only computation beyond
plotting is the Gaussian KDE used for the convergence overlay.
"""

__version__ = "0.1.0"

from .plots import (plot_acf, plot_convergence, plot_phase_diagram,
                    plot_sample_grid, plot_spectrum)
from .spec import FigureSpec, SchemaError

__all__ = ["plot_acf", "plot_convergence", "plot_phase_diagram",
           "plot_sample_grid", "plot_spectrum", "FigureSpec", "SchemaError",
           "__version__"]
