"""agrodw: an embedded hybrid-OLAP warehouse for farm production data."""

__version__ = "0.1.0"
