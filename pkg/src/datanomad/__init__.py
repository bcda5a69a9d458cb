"""Column-wise tamper-evident digests for survey exports."""

__version__ = "0.1.0"
