"""Exchange mechanisms on opportunity graphs: prices, complexity, search."""

__version__ = "0.1.0"
