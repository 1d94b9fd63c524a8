"""Spatio-temporal alignment of measure-valued time series."""

from ._sta import *  # noqa: F401,F403
from ._sta import NumericalError, DomainError, IoError  # noqa: F401
