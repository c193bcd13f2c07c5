"""Small-target diffusion asymptotics in planar domains."""
__version__ = "0.1.0"
