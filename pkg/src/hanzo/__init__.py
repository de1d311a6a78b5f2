"""Hanzo srmrtools package."""
