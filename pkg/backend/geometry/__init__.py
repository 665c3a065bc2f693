"""
Geometry module - Marcos especiales, medida de Leray-Levi, cuasi-distancia y cortes
"""
