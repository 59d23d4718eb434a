"""Figure rendering for consdyn run directories.

This package consumes only the files a run writes (``energies.csv``,
``trace.csv``, ``hysteresis.csv``, ``damage.csv``, ``config.txt``) and never
imports the simulation code, so it can be installed and versioned
independently of it.
"""

from .figures import FigureKind, render_figures
from .reader import MissingColumnError, PlotsError, RunDirectory

__all__ = [
    "FigureKind",
    "MissingColumnError",
    "PlotsError",
    "RunDirectory",
    "render_figures",
]

__version__ = "0.1.0"
