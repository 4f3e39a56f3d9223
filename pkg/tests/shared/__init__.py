"""Tests for shared models and utilities."""
