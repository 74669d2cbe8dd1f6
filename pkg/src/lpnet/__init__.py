"""Pyramid autoencoder toolkit: classical pyramid oracles, a small neural
engine with hand-derived gradients, the two-branch autoencoder, a pyramid
super-resolution pipeline, and conv-net cost analysis."""

from .backends import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
