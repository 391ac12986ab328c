"""Work fluctuations of a driven quantum system under a single unsharp energy measurement."""

__version__ = "0.1.0"
