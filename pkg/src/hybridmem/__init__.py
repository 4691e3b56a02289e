"""Circuit-level simulator for tiled (hybrid) memristor crossbar memories."""

__version__ = "0.1.0"
