"""Adapters between the library types and external formats (JSON, CSV)."""
