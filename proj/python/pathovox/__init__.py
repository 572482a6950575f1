"""Voice pathology detection: audio framing, CNN+LSTM training and evaluation."""

from ._pathovox import *  # noqa: F401,F403
from ._pathovox import __doc__  # noqa: F401
