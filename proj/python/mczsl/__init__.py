"""Continual zero-shot classifier: attribute embedding network, replay and protocols."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
