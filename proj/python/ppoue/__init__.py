"""PPO with uncertainty-aware exploration, backed by the C++ core."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
