"""
============================================================================
ESQUEMAS CENTRALIZADOS - szego-lab
============================================================================
Todos los artefactos (mallas, matrices, informes) y la CLI DEBEN pasar por
estos esquemas para garantizar configuraciones reproducibles.

Modelos:
- DomainSpec          catalogo de dominios {ball, ellipsoid, perturbed_ball}
- KernelSpec          nucleo discretizado + medida
- RunConfig           configuracion completa de una ejecucion
- VerificationReport  resultado de una verificacion nombrada
============================================================================
"""

import hashlib
import json
import math
import os
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ============================================================================
# ENUMS
# ============================================================================

class DomainName(str, Enum):
    """Catalogo de dominios estrictamente pseudoconvexos"""
    BALL = "ball"
    ELLIPSOID = "ellipsoid"
    PERTURBED_BALL = "perturbed_ball"


class MeasureKind(str, Enum):
    """Medidas de frontera"""
    SIGMA = "sigma"    # superficie inducida
    LAMBDA = "lambda"  # Leray-Levi
    OMEGA = "omega"    # phi * Leray-Levi


class KernelKind(str, Enum):
    """Nucleos escalares disponibles"""
    IDENTITY = "identity"
    G0 = "g0"
    G_EPS = "g_eps"
    CF_DENSITY = "cf_density"
    ESSENTIAL = "essential"
    ADJOINT_ESSENTIAL = "adjoint_essential"
    TRUNCATED_ESSENTIAL = "truncated_essential"
    TRUNCATED_ADJOINT = "truncated_adjoint"
    ANTISYM_A = "antisym_A"


TRUNCATED_KINDS = {
    KernelKind.TRUNCATED_ESSENTIAL,
    KernelKind.TRUNCATED_ADJOINT,
    KernelKind.ANTISYM_A,
}


class AssemblyMode(str, Enum):
    """Tratamiento de la diagonal al ensamblar"""
    PLAIN = "plain"              # diagonal nula
    SUBTRACTION = "subtraction"  # filas reproducen constantes
    OFFSET = "offset"            # filas evaluadas en z^delta
    EXTRAPOLATED = "extrapolated"  # cuadratura fina en z^delta, extrapolada a delta = 0


class PhiFamily(str, Enum):
    """Catalogo fijo de pesos phi"""
    CONST = "const"  # 1
    RE1 = "re1"      # 1 + a Re w1
    ABS1 = "abs1"    # 1 + a |w1|^2


# ============================================================================
# DOMINIO
# ============================================================================

class DomainSpec(BaseModel):
    """Seleccion de dominio por nombre + parametros"""
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {"name": "perturbed_ball", "n": 2, "kappa": 0.1, "mu": 0.5}
        },
    )

    name: DomainName = DomainName.BALL
    n: int = Field(default=2, ge=2, description="Dimension compleja")
    a: Optional[Tuple[float, ...]] = None
    kappa: float = Field(default=0.1, ge=0.0, le=0.5)
    mu: Optional[float] = Field(default=None, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_params(self) -> "DomainSpec":
        if self.name == DomainName.ELLIPSOID:
            if self.a is None:
                raise ValueError("ellipsoid requires coefficients 'a'")
            if len(self.a) != self.n:
                raise ValueError(f"ellipsoid needs {self.n} coefficients, got {len(self.a)}")
            if any(not (c > 0 and math.isfinite(c)) for c in self.a):
                raise ValueError(f"ellipsoid coefficients must be positive: {self.a}")
        return self


# ============================================================================
# NUCLEOS
# ============================================================================

class KernelSpec(BaseModel):
    """Nucleo discretizado contra una medida etiquetada"""
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {"kind": "truncated_essential", "eps": 0.01, "s": 0.25, "measure": "lambda"}
        },
    )

    kind: KernelKind
    eps: Optional[float] = Field(default=None, gt=0.0)
    s: Optional[float] = Field(default=None, gt=0.0)
    measure: MeasureKind = MeasureKind.LAMBDA

    @model_validator(mode="after")
    def _check_truncation(self) -> "KernelSpec":
        if self.kind in TRUNCATED_KINDS and self.s is None:
            raise ValueError(f"kernel '{self.kind.value}' requires a truncation scale s > 0")
        if self.kind == KernelKind.CF_DENSITY and self.measure != MeasureKind.SIGMA:
            raise ValueError("cf_density is a density against sigma")
        return self


# ============================================================================
# CONFIGURACION DE EJECUCION
# ============================================================================

class SSchedule(BaseModel):
    """Parametros de la escala de truncamiento s(eps)"""
    model_config = ConfigDict(frozen=True)

    s0: float = Field(default=0.5, gt=0.0, le=2.0)
    halvings: int = Field(default=3, ge=1, le=6)


class RunConfig(BaseModel):
    """Configuracion completa de una ejecucion de la CLI"""
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "domain": {"name": "ball", "n": 2},
                "resolution": 16,
                "eps": [0.1, 0.01, 0.001],
                "degree": 6,
                "measure": "lambda",
                "phi": "re1",
                "phi_a": 0.5,
                "seed": 0,
            }
        },
    )

    domain: DomainSpec = Field(default_factory=DomainSpec)
    resolution: int = Field(default=16, ge=8, le=64)
    eps: Tuple[float, ...] = (0.1, 0.01, 0.001)
    s_schedule: SSchedule = Field(default_factory=SSchedule)
    degree: int = Field(default=6, ge=0, le=16)
    measure: MeasureKind = MeasureKind.LAMBDA
    phi: PhiFamily = PhiFamily.CONST
    phi_a: float = Field(default=0.5, ge=-0.9, le=0.9)
    seed: int = Field(default=0, ge=0)
    samples: int = Field(default=2000, ge=10)
    out_dir: str = "out"
    mesh_path: Optional[str] = None

    @field_validator("eps")
    @classmethod
    def _eps_range(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if not value:
            raise ValueError("at least one eps value is required")
        for e in value:
            if not 0.0 < e < 0.5:
                raise ValueError(f"eps values must lie in (0, 0.5), got {e}")
        return tuple(value)

    @field_validator("mesh_path")
    @classmethod
    def _mesh_exists(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and not os.path.exists(value):
            raise ValueError(f"mesh file not found: {value}")
        return value

    def trend_resolutions(self) -> List[int]:
        """Resoluciones para tendencias de refinamiento (gruesa, fina)"""
        coarse = max(8, self.resolution - 4)
        return sorted({coarse, self.resolution})

    def config_hash(self) -> str:
        """sha256 de la configuracion canonica (sin rutas de salida)"""
        payload = self.model_dump(mode="json", exclude={"out_dir", "mesh_path"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# ============================================================================
# INFORMES DE VERIFICACION
# ============================================================================

class VerificationReport(BaseModel):
    """Resultado de una verificacion nombrada"""
    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "check_name": "quasi_tri",
                "paper_anchor": "quasi-triangle inequality for delta",
                "samples": 2000,
                "measured": {"C_tri": 1.9},
                "tolerance": 0.1,
                "passed": True,
                "mesh_trend": [[12, 1.88], [16, 1.9]],
            }
        },
    )

    check_name: str
    paper_anchor: str
    samples: int = Field(ge=0)
    measured: Dict[str, Optional[float]] = Field(default_factory=dict)
    tolerance: float
    passed: bool
    mesh_trend: List[Tuple[int, Optional[float]]] = Field(default_factory=list)
    domain: str = ""
    config_hash: str = ""
    key_constant: str = ""
    error: Optional[str] = None

    @field_validator("measured")
    @classmethod
    def _finite_measured(cls, value: Dict[str, Optional[float]]) -> Dict[str, Optional[float]]:
        return {k: (float(v) if v is not None and math.isfinite(v) else None) for k, v in value.items()}

    @field_validator("mesh_trend")
    @classmethod
    def _finite_trend(cls, value):
        return [(int(r), (float(v) if v is not None and math.isfinite(v) else None)) for r, v in value]


# ============================================================================
# REGISTRO DE ANCLAS (nombre de verificacion -> estimacion que comprueba)
# ============================================================================

CHECK_ANCHORS: Dict[str, str] = {
    "prop1_interior": "interior comparability |g_eps(w,z)| ~ |x_n| + |w-z|^2 + |rho(z)|",
    "prop1_boundary": "boundary comparability |g_eps(w,z)| ~ |x_n| + |z'|^2 for z on bD",
    "quasi_sym": "quasi-symmetry delta(w,z) ~ delta(z,w)",
    "quasi_tri": "quasi-triangle delta(w,z) <~ delta(w,zeta) + delta(zeta,z)",
    "dist_bracket": "distance bracket |w-z| <~ delta(w,z) <~ |w-z|^(1/2)",
    "ball_measure": "ball measure lambda(B_r(w)) ~ r^(2n)",
    "int_beta": "local integrals of delta^(-2n+beta) <= c r^beta and tails of delta^(-2n-beta) <= c r^-beta",
    "int_log": "off-ball integral of delta^(-2n) <= c log(1/r)",
    "corollary2": "normal offset |g_eps(w,z^delta)| ~ |g_eps(w,z)| + delta",
    "reproducing": "Cauchy-Fantappie reproducing C(f)(z) = F(z)",
    "holder_rate": "boundary convergence |F^d1 - F^d2| <~ max(d1,d2)^(alpha/2)",
    "eps_symmetry": "smoothed symmetry |g_eps(w,z) - conj g_eps(z,w)| <~ eps delta(w,z)^2",
    "diff_413": "kernel smoothness |K(w,z) - K(w,z')| <~ delta(z,z')/delta(w,z)^(2n+1)",
    "antisym_trend": "antisymmetric part ||T^s - (T^s)*|| <~ eps^(1/2)",
    "identity_c": "Szego identity S(I + C - C*) = C",
    "inversion_621": "Szego reconstruction from C + S R* - S R = S(I + A)",
    "commutator_trend": "commutator ||[T^s, phi]|| small with the oscillation of phi",
    "cube_bound": "cube decomposition ||T|| <= A N with N = 3^(2n)",
    "schur": "Schur test: unit row and column integrals give ||T||_p <= 1",
    "lower_bound": "Levi lower bound Re g_eps(w,z) >= c(-rho(z) + |w-z|^2)",
    "eps_compare": "smoothing comparability |g_eps(w,z)| ~ |g_0(w,z)|",
    "leray_levi_mass": "Leray-Levi measure d(lambda) = Lambda d(sigma)",
    "remainder_bound": "Cauchy-Fantappie remainder |R(w,z)| <~ delta(w,z)^(-2n+1)",
    "g_difference": "denominator smoothness |g_eps(w,z) - g_eps(w',z)| <~ delta(w,w')^2 + delta(w,w')delta(w,z)",
    "szego_identities": "Szego identities C S = S and S C = C",
    "dagger_smallness": "dagger split T - T^dagger = T - T* + phi^-1 [phi, T*]",
    "weighted_projection": "weighted projection laws for S_omega and T^dagger = phi^-1 T* phi",
}


def get_check_anchor(name: str) -> str:
    """Obtiene el ancla de una verificacion registrada"""
    if name not in CHECK_ANCHORS:
        raise ValueError(f"Verificacion desconocida: {name}. Validas: {list(CHECK_ANCHORS.keys())}")
    return CHECK_ANCHORS[name]
