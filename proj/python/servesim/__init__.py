"""Trace-driven simulator for SLO-aware LLM batch scheduling and layer
placement. The heavy lifting lives in the compiled ``_core`` extension."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__version__ = "0.1.0"
