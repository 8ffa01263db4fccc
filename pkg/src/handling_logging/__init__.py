"""Logging configuration (dictConfig JSON) and the JSON-lines formatter."""
