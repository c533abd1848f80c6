"""Fast adaptive downlink beamforming: classical solvers, embedding model,
and the SVR adaptation head, backed by the C++ core."""

from fastbeam._core import *  # noqa: F401,F403
from fastbeam._core import __doc__  # noqa: F401
