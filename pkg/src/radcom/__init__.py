"""Joint radar beampattern and NOMA multicast-unicast beamforming."""

__version__ = "0.1.0"
