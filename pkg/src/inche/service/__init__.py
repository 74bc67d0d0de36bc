"""HTTP service exposing keys, precomputed contexts, and benchmark runs."""

from .app import app, create_app

__all__ = ["app", "create_app"]
