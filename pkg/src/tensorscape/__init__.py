"""tensorscape: critical-point landscape toolkit for symmetric order-3
tensor decomposition under the Frobenius and cubic-Gaussian norms."""

from tensorscape.core import Kernel, loss

__version__ = "0.1.0"

__all__ = ["Kernel", "loss", "__version__"]
