"""Numerical verification of Webster-type formulae for Chern-minimal
surfaces in Hermitian surfaces.

Modules: ``ambient`` (metrics, Chern connection), ``domain`` (surface grids),
``immersion`` (pullbacks and mean curvature), ``angle`` (Kähler angle and
singular points), ``webster`` (curvatures, Euler numbers, reports),
``flow`` (energy descent) and ``cli``.
"""

from .errors import ChernMinError

__version__ = "0.1.0"

__all__ = ["ChernMinError", "__version__"]
