"""Cutoff entropy and exact mixing curves for random lifts of weighted multigraphs."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
