"""Adversarial program generation through optimized obfuscations."""
__version__ = "0.1.0"
