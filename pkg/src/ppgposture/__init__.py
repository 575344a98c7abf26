"""PPG postural-movement recognition pipeline."""

from .kernels import BACKEND
from .recording import ActivityClass, Recording

__all__ = ["ActivityClass", "BACKEND", "Recording"]
__version__ = "0.1.0"
