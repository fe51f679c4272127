"""Shape-typed lambda calculus over RDF graphs."""

__version__ = "0.1.0"
