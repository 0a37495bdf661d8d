"""Floquet-Bloch spectra of periodic thermodiffusive elastic laminates."""

__version__ = "0.1.0"
