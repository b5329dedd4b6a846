"""Tests for fglab."""
