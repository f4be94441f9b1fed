"""Knowledge-based Cα pair potentials trained by linear programming."""

__version__ = "0.1.0"
