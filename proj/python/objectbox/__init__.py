"""Python bindings for the objectbox box-geometry library.

Functions returning reports (``fit_scene``, ``compare_losses``,
``dataset_stats`` and the counts half of ``load_coco``) hand back JSON strings
in the same layout the command-line tool writes.
"""

from ._objectbox import *  # noqa: F401,F403
from ._objectbox import __doc__  # noqa: F401

__version__ = "0.1.0"
