"""Multi-agent pedestrian trajectory generation with explicit mixture destinations."""

__version__ = "0.1.0"
