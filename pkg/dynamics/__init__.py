"""Dynamics package initialization."""
