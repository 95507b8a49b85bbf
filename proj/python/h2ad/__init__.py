"""DOA estimation on heterogeneous hybrid analog-digital arrays."""

from ._h2ad import *  # noqa: F401,F403
from ._h2ad import __version__  # noqa: F401
