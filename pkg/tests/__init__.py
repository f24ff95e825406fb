"""Test suite for esp-optimizer."""
