"""Python bindings for the AMGS contact LCP solvers."""

from ._amgs import *  # noqa: F401,F403
from ._amgs import __doc__  # noqa: F401
