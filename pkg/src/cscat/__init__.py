"""Scattering by a sound-soft obstacle with attached penetrable media.

Submodules are imported lazily so that ``cscat.cli`` can set thread counts
before numpy loads.
"""

__version__ = "0.1.0"
