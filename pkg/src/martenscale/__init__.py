"""Compatibility algebra, explicit microstructures and energy scaling experiments
for two-dimensional martensitic phase transformations."""

__version__ = "0.1.0"
