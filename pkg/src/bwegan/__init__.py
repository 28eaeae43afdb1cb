"""GAN-based speech bandwidth expansion with a numpy training stack."""

__version__ = "0.1.0"
