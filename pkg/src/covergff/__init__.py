"""Cover times of random walks through the Gaussian free field."""

__version__ = "0.1.0"
