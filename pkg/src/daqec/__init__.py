"""Distributed approximate quantum error correction workbench."""

__version__ = "0.1.0"

from . import allocation, bounds_analytics, mixed_radix_sim, stabilizer_steane, wstate_code

__all__ = [
    "__version__",
    "allocation",
    "bounds_analytics",
    "mixed_radix_sim",
    "stabilizer_steane",
    "wstate_code",
]
