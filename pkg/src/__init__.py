"""qaffine: exact module computations for the twisted affine queer Lie superalgebra."""

__version__ = "0.1.0"
