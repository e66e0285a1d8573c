"""Post-processing and figure generation for lwsrhd snapshot files."""

__version__ = "0.1.0"
