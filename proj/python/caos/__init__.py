from ._caos import *  # noqa: F401,F403
from ._caos import __doc__  # noqa: F401
