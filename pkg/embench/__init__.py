"""embench - train and compare word embeddings under one controlled setup."""

__version__ = "0.1.0"
