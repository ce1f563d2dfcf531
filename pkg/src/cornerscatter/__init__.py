"""Corner scattering workbench: exact Laplace-transform certificates and 2-D numerics."""

__version__ = "0.1.0"
