"""Probe-graph transferability toolkit."""

from ._core import *  # noqa: F401,F403
from ._core import Error, FormatError, IoError, ValidationError  # noqa: F401
