"""
Operators module - Matrices de Nystrom, proyeccion de Szego y normas
"""
