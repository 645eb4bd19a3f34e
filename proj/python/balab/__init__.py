"""Three-velocity ballistic annihilation: exact window resolution, Monte-Carlo estimators and closed-form bounds."""

from ._balab import *  # noqa: F401,F403
from ._balab import __doc__  # noqa: F401
