"""Cloud/fog/device controller-worker runtime on a deterministic simulator."""
__version__ = "0.1.0"
