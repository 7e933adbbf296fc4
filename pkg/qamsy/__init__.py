__version__ = "0.1.0"

from . import cli  # noqa: E402
