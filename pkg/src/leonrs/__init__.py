"""Dual-function LEO constellation: navigation PVT bounds, remote-sensing
SAINR and joint transmit beamforming for a satellite service group."""

__version__ = "0.1.0"
