"""
Tests package for demolink
"""
