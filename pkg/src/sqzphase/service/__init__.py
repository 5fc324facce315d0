"""HTTP service wrapping the estimation library."""

from .app import create_app

__all__ = ["create_app"]
