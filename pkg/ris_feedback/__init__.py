"""Control-channel feedback simulation for RIS-aided uplinks."""

__version__ = "0.3.0"
