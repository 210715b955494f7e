"""Spectral Navier-Stokes solver with kappa-ladder interval diagnostics."""
from .spectral_core import WavenumberGrid, SpectralField, make_grid
from .dynamics import ForcingField, SimState, make_forcing, step
from .harness import SimConfig

__all__ = ["WavenumberGrid", "SpectralField", "make_grid", "ForcingField", "SimState",
           "make_forcing", "step", "SimConfig"]
__version__ = "0.1.0"
