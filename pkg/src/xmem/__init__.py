"""Memory classification and excursion-volume scaling for stationary random fields."""

__version__ = "0.1.0"
