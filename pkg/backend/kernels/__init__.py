"""
Kernels module - Denominadores g y nucleos de Cauchy-Fantappie
"""
