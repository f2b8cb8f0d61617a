"""Cascaded FSRCNN super-resolution core."""

try:
    from ._csrcnn import *  # noqa: F401,F403
    from ._csrcnn import __version__  # noqa: F401
except ImportError:  # running against a bare build tree
    from _csrcnn import *  # noqa: F401,F403
    from _csrcnn import __version__  # noqa: F401
