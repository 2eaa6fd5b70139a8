"""Bounds package initialization."""
