from .simulator import Simulator  # NOQA


__version__ = '0.3.0'
