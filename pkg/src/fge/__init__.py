"""Form 144 / Form 4 intent-to-execution analytics engine."""

__version__ = "0.1.0"
