"""
Test package for heston_escape.
"""
