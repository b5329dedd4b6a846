"""FGLab: exact p-local computations with formal group laws and their operations."""

__version__ = "0.1.0-dev0"
