"""Synthetic pre-beamforming radar RD / BEV occupancy toolkit."""

from ._rdbev import *  # noqa: F401,F403
from ._rdbev import __doc__  # noqa: F401

__version__ = "0.1.0"
