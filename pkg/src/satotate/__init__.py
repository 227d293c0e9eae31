"""Effective Sato-Tate toolkit: Lie characters, Vinogradov smoothing,
trace measures, Frobenius traces and prime-sum experiments."""

__version__ = "0.1.0"
