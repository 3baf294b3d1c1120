"""Hard-ball collision constructions and their event-driven verification."""

__version__ = "0.1.0"
