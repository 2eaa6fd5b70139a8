"""Integrations package initialization."""
