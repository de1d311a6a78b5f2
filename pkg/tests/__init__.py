"""Tests for the srmrtools command line tools."""
