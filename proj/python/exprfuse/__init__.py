"""Multi-model multi-fold ensemble toolkit for 8-class expression recognition."""

from ._exprfuse import *  # noqa: F401,F403
from ._exprfuse import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
