"""Tests for semequal."""
