"""
Common module - Configuracion, esquemas, errores y metricas compartidos
"""
from .config import settings
from .errors import *
from .schemas import *
