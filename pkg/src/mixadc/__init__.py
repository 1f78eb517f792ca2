"""Channel estimation for massive MIMO uplinks with mixed-resolution ADCs."""

__version__ = "0.1.0"
