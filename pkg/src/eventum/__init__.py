"""Unitary dilation and past/future string simulation of sequential quantum measurement."""

__version__ = "0.1.0"
