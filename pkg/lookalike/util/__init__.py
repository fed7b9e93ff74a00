"""
Various utilities.
"""
