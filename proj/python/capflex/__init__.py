from ._capflex import *  # noqa: F401,F403
from ._capflex import __version__  # noqa: F401
