"""Exit measures and local time of super-Brownian motion near a point."""
from .constants import CriticalExponents, exponents, psi0, v_infinity

__version__ = "0.1.0"

__all__ = ["CriticalExponents", "exponents", "psi0", "v_infinity", "__version__"]
