"""Tests for the lab engine."""
