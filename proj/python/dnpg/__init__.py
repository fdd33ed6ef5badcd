"""Guided diffusion sampling on analytic Gaussian-mixture worlds."""

from ._core import *  # noqa: F401,F403
from ._core import ConfigError, IoError, NumericalError, World, linear_schedule

__all__ = ["ConfigError", "IoError", "NumericalError", "World", "linear_schedule"]
