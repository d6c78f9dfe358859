"""Command-line front end for embench."""

from .app import EmbenchCLI

__all__ = ["EmbenchCLI"]
