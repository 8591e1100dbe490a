"""Downlink CSI amplitude prediction under base-station receiver distortion."""

__version__ = "0.1.0"
