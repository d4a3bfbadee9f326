"""
Test suite for spinlet
"""
