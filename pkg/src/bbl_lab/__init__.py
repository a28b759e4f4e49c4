"""Numerical verification of Brunn-Minkowski, Borell-Brascamp-Lieb and torsion inequalities in the plane."""

__version__ = "0.1.0"
