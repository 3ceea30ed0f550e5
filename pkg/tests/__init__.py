"""Tests for commlsd."""
