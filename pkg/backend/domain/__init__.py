"""
Domain module - Catalogo de dominios y Hessianos suavizados
"""
