"""deforge: exact manufactured-solution datasets for differential equations."""

from __future__ import annotations

__version__ = "0.1.0"
GENERATOR_VERSION = f"deforge {__version__}"
