"""Procedural hand world + two-stage inpainting refiner with decoupled style and structure guidance."""

__version__ = "0.1.0"
