"""
Analyses on finite metric measure spaces.
"""
