"""Open image-target AR recognition engine and herb-learning platform.

Register reference pictures as recognizable targets, find them in camera
frames via binary natural features with geometric verification, recover the
planar pose, overlay wireframe models, and serve per-herb knowledge text.
"""

from herbar._kernels import KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
