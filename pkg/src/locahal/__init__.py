"""Dyadic cubes, local singular integrals and maximal operators on finite
locally homogeneous spaces."""

__version__ = "0.1.0"
