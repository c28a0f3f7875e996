"""
revstream command line

Exposes the `revstream` console script.
"""

__version__ = "0.1.0"
