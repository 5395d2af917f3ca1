"""Numerical laboratory for mean curvature flow of convex hypersurfaces of revolution."""

__version__ = "0.1.0"
