"""
Mesh module - Mallas de frontera y cuadratura
"""
