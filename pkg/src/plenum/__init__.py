"""Parliamentary debate corpus pipeline and search toolkit."""

__version__ = "0.1.0"
