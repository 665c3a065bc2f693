"""
CLI module - Punto de entrada szego-lab
"""
