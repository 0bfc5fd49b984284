"""Warped products ``dr^2 + sum f_i^2 g_i`` with certified nonnegative Ricci curvature."""

from .curvature import (FiberDescriptor, LinearProfilePair, RicciEval, ricci_fd_oracle, ricci_linear, ricci_multi,
                        ricci_triple)
from .specs import MultiWarpSpec, TripleWarpSpec

__version__ = "0.1.0"

__all__ = ["FiberDescriptor", "LinearProfilePair", "RicciEval", "ricci_fd_oracle", "ricci_linear", "ricci_multi",
           "ricci_triple", "MultiWarpSpec", "TripleWarpSpec", "__version__"]
