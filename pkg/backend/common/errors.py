"""
============================================================================
ERRORES - Jerarquia de excepciones de szego-lab
============================================================================
Todas derivan de SzegoLabError; la CLI las convierte en codigo de salida 2.
============================================================================
"""


class SzegoLabError(Exception):
    """Error base del laboratorio"""


# ============================================================================
# CONFIGURACION
# ============================================================================

class ConfigurationError(SzegoLabError):
    """Nombre desconocido o configuracion invalida"""


class HashMismatchError(ConfigurationError):
    """Artefactos generados con configuraciones distintas"""

    def __init__(self, expected: str, found: str, what: str = "artifact"):
        self.expected = expected
        self.found = found
        super().__init__(
            f"{what} hash mismatch: config={expected} file={found}"
        )


class UnknownCheckError(ConfigurationError):
    """Verificacion no registrada"""


# ============================================================================
# DOMINIO / GEOMETRIA
# ============================================================================

class DomainRejectedError(SzegoLabError):
    """La forma de Levi no es definida positiva en las muestras"""


class DegenerateGradientError(SzegoLabError):
    """|grad rho| por debajo del umbral"""


class OffBoundaryError(SzegoLabError):
    """Punto que deberia estar en bD con |rho| fuera de tolerancia"""


class UnresolvableEpsilonError(SzegoLabError):
    """La escala de suavizado necesaria cae por debajo de la resolucion"""


# ============================================================================
# MALLA
# ============================================================================

class MeshingError(SzegoLabError):
    """Fallo al construir o cargar una malla"""


class UnsupportedDimensionError(MeshingError):
    """Dimension compleja fuera de {2, 3}"""


class DeltaRangeError(SzegoLabError):
    """Desplazamiento normal fuera de (0, delta_max)"""


class NonFiniteIntegrandError(SzegoLabError):
    """NaN/Inf en un integrando"""

    def __init__(self, node: int, value: complex):
        self.node = node
        super().__init__(f"non-finite integrand at node {node}: {value}")


# ============================================================================
# NUCLEOS / OPERADORES
# ============================================================================

class NearSingularityError(SzegoLabError):
    """|g| por debajo del suelo sin sustraccion ni desplazamiento"""

    def __init__(self, pair, value: float):
        self.pair = pair
        super().__init__(f"|g| = {value:.3e} below floor at pair {pair}")


class RankDeficiencyError(SzegoLabError):
    """Matriz de Gram mal condicionada: grado rechazado"""


class DivergenceRiskError(SzegoLabError):
    """Serie de Neumann con ||A|| >= 1"""
