"""
Tests for walker-lab.
"""
