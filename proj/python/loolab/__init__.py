"""Leave-one-out model comparison and weighting."""

from ._loolab import *  # noqa: F401,F403
from ._loolab import __version__

__all__ = [name for name in dir() if not name.startswith("_")]
