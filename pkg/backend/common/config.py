"""
============================================================================
CONFIGURACION CENTRALIZADA
============================================================================
Parametros globales de szego-lab leidos del entorno (y de un .env local).
============================================================================
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()


@dataclass
class Settings:
    """Configuracion global del laboratorio"""

    # Paralelismo (0 = todos los nucleos)
    SZEGO_THREADS: int = int(os.getenv("SZEGO_THREADS", "0"))

    # Salidas
    SZEGO_OUT_DIR: str = os.getenv("SZEGO_OUT_DIR", "out")
    SZEGO_LOG_LEVEL: str = os.getenv("SZEGO_LOG_LEVEL", "INFO")
    SZEGO_METRICS_FILE: str = os.getenv("SZEGO_METRICS_FILE", "")

    # Muestreo
    SZEGO_SEED: int = int(os.getenv("SZEGO_SEED", "0"))

    # Tolerancias numericas
    KERNEL_FLOOR: float = float(os.getenv("SZEGO_KERNEL_FLOOR", "1e-14"))
    GRAM_COND_MAX: float = float(os.getenv("SZEGO_GRAM_COND_MAX", "1e12"))
    GRAM_COND_TARGET: float = float(os.getenv("SZEGO_GRAM_COND_TARGET", "1e10"))
    BOUNDARY_TOL: float = float(os.getenv("SZEGO_BOUNDARY_TOL", "1e-10"))
    FRAME_TOL: float = float(os.getenv("SZEGO_FRAME_TOL", "1e-8"))

    @property
    def thread_count(self) -> int:
        if self.SZEGO_THREADS > 0:
            return self.SZEGO_THREADS
        return os.cpu_count() or 1


# Instancia global
settings = Settings()
