"""Tests package for Arthos."""

