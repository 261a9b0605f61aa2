"""
Finite metric measure spaces, fields on them, file formats and the example corpus.
"""
