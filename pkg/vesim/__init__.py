"""Boundary-integral simulation of 2D vesicle suspensions with viscosity contrast."""

__version__ = "0.1.0"
