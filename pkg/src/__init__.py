"""
mmslab - Lipschitz analysis, Poincaré estimates and differentiable structures
on finite metric measure spaces.
"""

__version__ = "0.1.0"
