"""cedesim: seeded reinsurance treaty simulation with norm-governed agents."""

__version__ = "0.1.0"
