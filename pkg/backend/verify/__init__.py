"""
Verify module - Registro de verificaciones reproducibles
"""
