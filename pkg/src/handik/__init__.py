"""handik: articulated hand kinematics, parametric mesh, and shape-aware IK."""

__version__ = "0.1.0"

from .backend import backend_name  # noqa: F401
