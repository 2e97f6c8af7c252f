"""splatsim: physics-driven animation of 3D Gaussian Splatting objects."""

__version__ = "0.1.0"
