"""relap: runner re-identification across laps in fixed single-view video."""

__version__ = "0.1.0"
