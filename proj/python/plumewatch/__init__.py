"""Python access to the plumewatch core."""

from ._plumewatch import *  # noqa: F401,F403
from ._plumewatch import ValidationError, NotFoundError, IoError  # noqa: F401
