"""Numerical toolkit for Fourier spectra of measures, capacity-based box
dimensions, and product-measure bound verification."""

__version__ = "0.1.0"

from ._kernels import HAVE_COMPILED, backend

__all__ = ["HAVE_COMPILED", "backend", "__version__"]
