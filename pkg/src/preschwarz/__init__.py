"""preSchwarzian and Oda Schwarzian operators on truncated power series."""

__version__ = "0.1.0"
