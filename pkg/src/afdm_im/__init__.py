"""AFDM with index modulation: transceiver, detectors, BER bound and Monte-Carlo harness."""

__version__ = "0.1.0"
