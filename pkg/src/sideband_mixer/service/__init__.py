"""FastAPI service wrapping the toolkit; the CLI is a thin client of it."""

from .app import app, create_app

__all__ = ["app", "create_app"]
