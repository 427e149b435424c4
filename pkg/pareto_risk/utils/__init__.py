"""
Utility helpers and shared constants.
"""
