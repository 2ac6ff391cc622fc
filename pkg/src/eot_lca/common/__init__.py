"""Shared logging, manifest and error helpers."""
