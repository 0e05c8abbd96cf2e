"""Battery-life prediction for beach water sensors with rough-set feature reduction."""

__version__ = "0.1.0"
