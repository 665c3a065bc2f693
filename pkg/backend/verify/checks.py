"""
============================================================================
VERIFICACIONES NOMBRADAS
============================================================================
Una funcion por verificacion. Cada una recibe la RunConfig, construye sus
propios Workspace (uno por resolucion de la tendencia) y devuelve un
CheckResult con:

- measured:   constantes, pendientes y cocientes medidos
- key:        nombre de la constante seguida en la tendencia de refinamiento
- tolerance:  umbral de la verificacion
- passed:     funcion pura de measured frente a tolerance
============================================================================
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from common.errors import DivergenceRiskError
from common.schemas import AssemblyMode, KernelKind, KernelSpec, MeasureKind, PhiFamily, RunConfig
from domain.catalog import DEFAULT_PERTURBED_MU, levi_lower_bound, sample_boundary
from geometry.balls import RadialProfile, dyadic_radii, radial_profile
from geometry.frames import frames_at
from geometry.measure import closed_form_ratio, leray_levi_density
from geometry.quasi_distance import quasi_distance, quasi_distance_matrix
from kernels.cauchy import (
    eval_cf_density,
    eval_remainder,
    g_difference_ratio,
    kernel_difference_ratio,
    kernel_difference_ratio_w,
    symmetry_ratio,
)
from kernels.denominators import eval_g0, eval_g_eps
from mesh.boundary_mesh import delta_max, graded_mesh, mesh_scale, normal_offset
from operators.matrices import OperatorMatrix, assemble, build_hardy_basis, build_phi, supports_extrapolation
from operators.norms import commutator, cube_partition_bound, operator_norm, schur_constants
from operators.szego import (
    adjoint_dagger,
    adjoint_lambda,
    cauchy_operator,
    choose_degree,
    identity_c_residual,
    omega_inner,
    reconstruct_szego,
    restricted_norm,
    smooth_test_basis,
    szego_identities,
    szego_project,
    weighted_two_norm,
)
from verify import stats
from verify.workspace import HALVING_FLOOR, PILOT_SIZE, Workspace, build_workspace

logger = logging.getLogger(__name__)

BAND_WIDTH_MAX = 20.0
EPS_STABILITY = 0.1
TEST_DEGREE = 2
REPRODUCING_POINTS = 50
REPRODUCING_DEGREE = 4
INVERSION_EPS = 0.05
HOLDER_TARGETS = 8
# centros aleatorios del perfil radial y pares minimos por radio
RADIAL_CENTERS = 2000
MIN_HITS = 300
# nodos minimos (mediana por fila) en el soporte del corte
SUPPORT_MIN_NODES = 20
SCHUR_FLOOR = 1e-300
ROUNDOFF_FLOOR = 1e-8


@dataclass
class CheckResult:
    measured: Dict[str, Optional[float]]
    key: str
    tolerance: float
    passed: bool
    samples: int
    mesh_trend: List[Tuple[int, Optional[float]]] = field(default_factory=list)


def _trend(config: RunConfig, measure: Callable[[Workspace], float]) -> List[Tuple[int, float]]:
    """Valor de la constante clave en cada resolucion de la tendencia"""
    return [(res, float(measure(build_workspace(config, res)))) for res in config.trend_resolutions()]


# ============================================================================
# GEOMETRIA Y CUASI-DISTANCIA
# ============================================================================

def _prop1_bands(ws: Workspace, interior: bool) -> Dict[str, float]:
    count = ws.config.samples
    if interior:
        w, z = ws.boundary_pairs(count)
        z, _ = ws.interior_offsets(z)
    else:
        # equivalencia local: pares con |w - z| < mu
        mu = ws.domain.mu if ws.domain.mu is not None else DEFAULT_PERTURBED_MU
        w = sample_boundary(ws.domain, count, ws.rng)
        z = ws.nearby(w, scale_range=(1e-3, 0.9 * mu))
        near = (np.linalg.norm(w - z, axis=-1) < mu) & (np.linalg.norm(w - z, axis=-1) > 0)
        w, z = w[near], z[near]
    coords = frames_at(ws.domain, w).coordinates(z)
    x_n = np.abs(coords[:, -1].real)
    if interior:
        denom = x_n + np.sum(np.abs(w - z) ** 2, axis=-1) + np.abs(ws.domain.rho(z))
    else:
        denom = x_n + np.sum(np.abs(coords[:, :-1]) ** 2, axis=-1)
    lows, highs = [], []
    for eps in ws.config.eps:
        lo, hi, _ = stats.band(np.abs(eval_g_eps(ws.domain, ws.smoothed(eps), w, z)) / denom)
        lows.append(lo)
        highs.append(hi)
    return {
        "band_min": min(lows),
        "band_max": max(highs),
        "band_width": max(highs) / min(lows),
        "eps_spread": max(stats.relative_spread(lows), stats.relative_spread(highs)),
        "pairs": float(w.shape[0]),
    }


def _prop1(config: RunConfig, interior: bool) -> CheckResult:
    ws = build_workspace(config)
    measured = _prop1_bands(ws, interior)
    passed = measured["band_width"] < BAND_WIDTH_MAX and measured["eps_spread"] <= EPS_STABILITY
    return CheckResult(
        measured=measured,
        key="band_width",
        tolerance=BAND_WIDTH_MAX,
        passed=bool(passed),
        samples=int(measured["pairs"]) * len(config.eps),
    )


def check_prop1_interior(config: RunConfig) -> CheckResult:
    return _prop1(config, interior=True)


def check_prop1_boundary(config: RunConfig) -> CheckResult:
    return _prop1(config, interior=False)


def _refinement(
    config: RunConfig, measure: Callable[[Workspace], Dict[str, float]], key: str
) -> Tuple[Dict[str, float], List[Tuple[int, float]]]:
    """Constantes medidas en cada resolucion; devuelve las de la mas fina"""
    trend, measured = [], {}
    for res in config.trend_resolutions():
        measured = measure(build_workspace(config, res))
        trend.append((res, measured[key]))
    values = [v for _, v in trend]
    measured["refinement_spread"] = stats.relative_spread(values)
    return measured, trend


def _stable_band(measured: Dict[str, float], trend: List[Tuple[int, float]]) -> bool:
    """Constante finita y estable (EPS_STABILITY) entre resoluciones, o en el suelo de redondeo"""
    values = [v for _, v in trend]
    if not all(np.isfinite(v) and v >= 0 for v in values):
        return False
    return bool(all(v <= ROUNDOFF_FLOOR for v in values) or measured["refinement_spread"] <= EPS_STABILITY)


def _pilot_distances(ws: Workspace) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = quasi_distance_matrix(ws.domain, ws.pilot, ws.pilot)
    off = ~np.eye(len(ws.pilot), dtype=bool)
    euclid = np.linalg.norm(ws.pilot[None, :, :] - ws.pilot[:, None, :], axis=-1)
    return d, off, euclid


def _c_sym(ws: Workspace) -> float:
    d, off, _ = _pilot_distances(ws)
    return float(np.max(d[off] / d.T[off]))


def check_quasi_sym(config: RunConfig) -> CheckResult:
    trend = _trend(config, _c_sym)
    values = [v for _, v in trend]
    spread = stats.relative_spread(values)
    return CheckResult(
        measured={"C_sym": values[-1], "refinement_spread": spread},
        key="C_sym",
        tolerance=EPS_STABILITY,
        passed=bool(np.isfinite(values[-1]) and spread <= EPS_STABILITY),
        samples=PILOT_SIZE * (PILOT_SIZE - 1),
        mesh_trend=trend,
    )


def check_quasi_tri(config: RunConfig) -> CheckResult:
    trend = _trend(config, lambda ws: ws.calibration.c_tri)
    values = [v for _, v in trend]
    spread = stats.relative_spread(values)
    return CheckResult(
        measured={"C_tri": values[-1], "refinement_spread": spread},
        key="C_tri",
        tolerance=EPS_STABILITY,
        passed=bool(np.isfinite(values[-1]) and spread <= EPS_STABILITY),
        samples=4000,
        mesh_trend=trend,
    )


def check_dist_bracket(config: RunConfig) -> CheckResult:
    lowers, trend = [], []
    for res in config.trend_resolutions():
        d, off, euclid = _pilot_distances(build_workspace(config, res))
        lowers.append(float(np.max(euclid[off] / d[off])))
        trend.append((res, float(np.max(d[off] / np.sqrt(euclid[off])))))
    measured = {
        "C_lower": lowers[-1],
        "C_upper": trend[-1][1],
        "refinement_spread": max(stats.relative_spread(lowers), stats.relative_spread([v for _, v in trend])),
    }
    passed = _stable_band(measured, trend) and measured["C_lower"] > 0 and measured["C_upper"] > 0
    return CheckResult(
        measured=measured,
        key="C_upper",
        tolerance=EPS_STABILITY,
        passed=bool(passed),
        samples=PILOT_SIZE * (PILOT_SIZE - 1),
        mesh_trend=trend,
    )


# ============================================================================
# MEDIDA DE LERAY-LEVI E INTEGRALES
# ============================================================================

def _profile(ws: Workspace, exponents=()) -> RadialProfile:
    """Perfil radial sobre RADIAL_CENTERS centros aleatorios de bD"""
    centers = sample_boundary(ws.domain, RADIAL_CENTERS, ws.rng)
    d, off, _ = _pilot_distances(ws)
    top = 0.5 * float(np.max(d[off]))
    radii = dyadic_radii(top, smallest=top / 64.0)
    return radial_profile(ws.mesh, centers, radii, exponents)


def _ball_slope(ws: Workspace) -> Tuple[float, int]:
    profile = _profile(ws)
    keep = profile.resolved(MIN_HITS)
    if keep.size < 2:
        return float("nan"), int(keep.size)
    slope, _ = stats.loglog_slope(profile.radii[keep], profile.mass[keep])
    return slope, int(keep.size)


def check_ball_measure(config: RunConfig) -> CheckResult:
    target = 2.0 * config.domain.n
    trend = []
    radii_count = 0
    for res in config.trend_resolutions():
        slope, radii_count = _ball_slope(build_workspace(config, res))
        trend.append((res, slope))
    slope = trend[-1][1]
    tolerance = 0.05 * target
    return CheckResult(
        measured={"slope": slope, "target": target, "radii": float(radii_count)},
        key="slope",
        tolerance=tolerance,
        passed=bool(radii_count >= 3 and np.isfinite(slope) and abs(slope - target) <= tolerance),
        samples=RADIAL_CENTERS * radii_count,
        mesh_trend=trend,
    )


def check_int_beta(config: RunConfig) -> CheckResult:
    """
    Capas diadicas r/2 <= delta < r: la integral interior es la suma
    geometrica de capas con delta^(-2n+beta) y escala como r^beta; la
    exterior, con delta^(-2n-beta), como r^(-beta).
    """
    ws = build_workspace(config)
    two_n = 2 * config.domain.n
    exponents = [-two_n + beta for beta in (1, 2)] + [-two_n - beta for beta in (1, 2)]
    profile = _profile(ws, exponents)
    keep = profile.resolved(MIN_HITS, shells=True)
    r = profile.radii[keep]
    measured = {"radii": float(keep.size)}
    errors = []
    for beta in (1, 2):
        slope_in, _ = stats.loglog_slope(r, profile.shells[-two_n + beta][keep])
        slope_out, _ = stats.loglog_slope(r, profile.shells[-two_n - beta][keep])
        measured[f"slope_in_beta{beta}"] = slope_in
        measured[f"slope_out_beta{beta}"] = slope_out
        errors.extend([abs(slope_in - beta), abs(slope_out + beta)])
    worst = float(max(errors))
    measured["worst_exponent_error"] = worst
    return CheckResult(
        measured=measured,
        key="worst_exponent_error",
        tolerance=0.15,
        passed=bool(keep.size >= 3 and np.isfinite(worst) and worst <= 0.15),
        samples=int(profile.shell_hits[keep].sum()),
    )


def check_int_log(config: RunConfig) -> CheckResult:
    ws = build_workspace(config)
    exponent = -2.0 * config.domain.n
    profile = _profile(ws, [exponent])
    keep = profile.resolved(MIN_HITS)
    r = profile.radii[keep]
    slope, intercept, r2 = stats.linear_fit(np.log(1.0 / r), profile.outer[exponent][keep])
    return CheckResult(
        measured={"slope": slope, "intercept": intercept, "r_squared": r2, "radii": float(keep.size)},
        key="r_squared",
        tolerance=0.98,
        passed=bool(keep.size >= 3 and np.isfinite(r2) and r2 > 0.98 and slope > 0),
        samples=int(profile.hits[keep].sum()),
    )


def check_corollary2(config: RunConfig) -> CheckResult:
    ws = build_workspace(config)
    count = config.samples
    w, z = ws.boundary_pairs(count)
    grid = delta_max(ws.domain) * np.array([0.5, 0.25, 0.1, 0.05, 0.02])
    lows, highs = [], []
    for eps in config.eps:
        smoothed = ws.smoothed(eps)
        base = np.abs(eval_g_eps(ws.domain, smoothed, w, z))
        ratios = []
        for d in grid:
            shifted = normal_offset(ws.domain, z, d)
            ratios.append(np.abs(eval_g_eps(ws.domain, smoothed, w, shifted)) / (base + d))
        lo, hi, _ = stats.band(np.concatenate(ratios))
        lows.append(lo)
        highs.append(hi)
    width = max(highs) / min(lows)
    spread = max(stats.relative_spread(lows), stats.relative_spread(highs))
    return CheckResult(
        measured={"band_min": min(lows), "band_max": max(highs), "band_width": width, "eps_spread": spread},
        key="band_width",
        tolerance=BAND_WIDTH_MAX,
        passed=bool(width < BAND_WIDTH_MAX and spread <= EPS_STABILITY),
        samples=count * len(grid) * len(config.eps),
    )


def check_leray_levi_mass(config: RunConfig) -> CheckResult:
    def mass(ws: Workspace) -> float:
        return float(ws.mesh.lambda_weights.sum())

    trend = _trend(config, mass)
    ws = build_workspace(config)
    ratio = closed_form_ratio(ws.domain, ws.mesh.frames, ws.mesh.lambda_values)
    expected = 4.0 ** (config.domain.n - 1)
    ratio_spread = float(np.max(np.abs(ratio / expected - 1.0)))
    measured = {"lambda_mass": trend[-1][1], "closed_form_ratio": float(np.mean(ratio)), "ratio_spread": ratio_spread}
    passed = ratio_spread < 1e-8
    tolerance = 1e-3
    if ws.domain.name == "ball" and config.domain.n == 2:
        measured["mass_error"] = abs(trend[-1][1] - 1.0)
        passed = passed and measured["mass_error"] < tolerance
    return CheckResult(
        measured=measured,
        key="lambda_mass",
        tolerance=tolerance,
        passed=bool(passed),
        samples=ws.mesh.size,
        mesh_trend=trend,
    )


# ============================================================================
# DENOMINADORES
# ============================================================================

def check_lower_bound(config: RunConfig) -> CheckResult:
    ws = build_workspace(config)
    w, z = ws.boundary_pairs(config.samples)
    z, _ = ws.interior_offsets(z)
    minima = {}
    for eps in config.eps:
        g = eval_g_eps(ws.domain, ws.smoothed(eps), w, z)
        minima[f"min_ratio_eps{eps:g}"] = float(np.min(levi_lower_bound(ws.domain, g, w, z)))
    overall = min(minima.values())
    minima["min_ratio"] = overall
    return CheckResult(
        measured=minima,
        key="min_ratio",
        tolerance=0.0,
        passed=bool(overall > 0),
        samples=config.samples * len(config.eps),
    )


def check_eps_compare(config: RunConfig) -> CheckResult:
    ws = build_workspace(config)
    w, z = ws.boundary_pairs(config.samples)
    g0 = np.abs(eval_g0(ws.domain, w, z))
    keep = g0 > 0
    lows, highs = [], []
    for eps in config.eps:
        lo, hi, _ = stats.band(np.abs(eval_g_eps(ws.domain, ws.smoothed(eps), w, z))[keep] / g0[keep])
        lows.append(lo)
        highs.append(hi)
    width = max(highs) / min(lows)
    return CheckResult(
        measured={"band_min": min(lows), "band_max": max(highs), "band_width": width},
        key="band_width",
        tolerance=BAND_WIDTH_MAX,
        passed=bool(width < BAND_WIDTH_MAX),
        samples=int(keep.sum()) * len(config.eps),
    )


def check_eps_symmetry(config: RunConfig) -> CheckResult:
    def constants(ws: Workspace) -> Dict[str, float]:
        w, z = ws.boundary_pairs(config.samples)
        d = quasi_distance(ws.domain, w, z)
        out = {}
        for eps in config.eps:
            smoothed = ws.smoothed(eps)
            near = d <= ws.truncation(eps)
            ratio = stats.finite(symmetry_ratio(ws.domain, smoothed, w[near], z[near], eps))
            out[f"C_eps{eps:g}"] = float(np.max(ratio)) if ratio.size else 0.0
            out[f"s_eps{eps:g}"] = ws.truncation(eps)
        out["C_max"] = max(out[f"C_eps{eps:g}"] for eps in config.eps)
        return out

    measured, trend = _refinement(config, constants, "C_max")
    return CheckResult(
        measured=measured,
        key="C_max",
        tolerance=EPS_STABILITY,
        passed=_stable_band(measured, trend),
        samples=config.samples * len(config.eps),
        mesh_trend=trend,
    )


def check_g_difference(config: RunConfig) -> CheckResult:
    def constants(ws: Workspace) -> Dict[str, float]:
        w, z = ws.boundary_pairs(config.samples)
        w_prime = ws.nearby(w)
        d = quasi_distance(ws.domain, w, z)
        out = {}
        for eps in config.eps:
            near = d <= ws.truncation(eps)
            ratio = stats.finite(g_difference_ratio(ws.domain, ws.smoothed(eps), w[near], w_prime[near], z[near]))
            out[f"C_eps{eps:g}"] = float(np.max(ratio)) if ratio.size else 0.0
        out["C_max"] = max(out.values())
        return out

    measured, trend = _refinement(config, constants, "C_max")
    return CheckResult(
        measured=measured,
        key="C_max",
        tolerance=EPS_STABILITY,
        passed=_stable_band(measured, trend),
        samples=config.samples * len(config.eps),
        mesh_trend=trend,
    )


# ============================================================================
# NUCLEOS
# ============================================================================

def _reproducing_error(ws: Workspace) -> float:
    """max |C(f)(z) - f(z)| / max|f| sobre monomios de grado <= 4"""
    mesh = ws.mesh
    n = ws.domain.dim_n
    rng = np.random.default_rng(ws.config.seed)
    u = rng.standard_normal((REPRODUCING_POINTS, n)) + 1j * rng.standard_normal((REPRODUCING_POINTS, n))
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    radius = ws.domain.radial_scale(u) * rng.uniform(0.1, 0.5, size=REPRODUCING_POINTS)
    points = radius[:, None] * u

    eps = ws.config.eps[0]
    smoothed = ws.smoothed(eps)
    density = np.stack([
        eval_cf_density(ws.domain, smoothed, mesh.nodes, z, mesh.frames) for z in points
    ])  # (P, N)
    weighted = density * mesh.sigma_weights[None, :]
    basis = build_hardy_basis(mesh, REPRODUCING_DEGREE)
    exact = np.prod(points[:, None, :] ** np.asarray(basis.exponents)[None, :, :], axis=-1)
    approx = weighted @ basis.columns
    scale = np.max(np.abs(basis.columns), axis=0)
    return float(np.max(np.abs(approx - exact) / scale[None, :]))


def check_reproducing(config: RunConfig) -> CheckResult:
    trend = _trend(config, _reproducing_error)
    values = [v for _, v in trend]
    tolerance = 1e-4
    return CheckResult(
        measured={"max_rel_error": values[-1], "decreasing": float(stats.monotone_decreasing(values))},
        key="max_rel_error",
        tolerance=tolerance,
        passed=bool(values[-1] < tolerance and stats.monotone_decreasing(values)),
        samples=REPRODUCING_POINTS,
        mesh_trend=trend,
    )


def check_holder_rate(config: RunConfig) -> CheckResult:
    """
    Exponente de convergencia de F^d(z) = C(f)(z + d nu) para f = |Re w_1|^alpha.

    Los blancos z cumplen Re z_1 = 0 (f no es suave en z); cada uno usa una
    cuadratura local graduada hasta la escala d.
    """
    alpha = 0.5
    ws = build_workspace(config)
    smoothed = ws.smoothed(config.eps[0])
    grid = delta_max(ws.domain) * 0.5 ** np.arange(1, 7)
    tau = ws.rng.uniform(0.3, 1.2, size=HOLDER_TARGETS)
    q = ws.rng.uniform(0.0, 2.0 * np.pi, size=HOLDER_TARGETS)
    u = np.stack([1j * np.cos(tau), np.sin(tau) * np.exp(1j * q)], axis=-1)
    targets = ws.domain.radial_scale(u)[:, None] * u

    values = np.empty((len(grid), HOLDER_TARGETS), dtype=complex)
    nodes = 0
    for j, z0 in enumerate(targets):
        local = graded_mesh(ws.domain, z0, grid[-1] / 4.0, config.domain)
        nodes += local.size
        f = np.abs(local.nodes[:, 0].real) ** alpha
        f0 = abs(z0[0].real) ** alpha
        shifted = normal_offset(ws.domain, np.repeat(z0[None, :], len(grid), axis=0), grid)
        for i, z in enumerate(shifted):
            density = eval_cf_density(ws.domain, smoothed, local.nodes, z, local.frames) * local.sigma_weights
            values[i, j] = f0 + np.sum(density * (f - f0))
    diffs = np.max(np.abs(np.diff(values, axis=0)), axis=1)
    slope, r2 = stats.loglog_slope(grid[:-1], diffs)
    tolerance = alpha / 2 - 0.05
    logger.info(f"holder_rate: exponent {slope:.3f} from {nodes} local nodes")
    return CheckResult(
        measured={"exponent": slope, "r_squared": r2, "alpha": alpha, "finest_offset": float(grid[-1])},
        key="exponent",
        tolerance=tolerance,
        passed=bool(np.isfinite(slope) and slope >= tolerance),
        samples=HOLDER_TARGETS * len(grid),
    )


def check_diff_413(config: RunConfig) -> CheckResult:
    def constants(ws: Workspace) -> Dict[str, float]:
        w, z = ws.boundary_pairs(config.samples)
        z_prime = ws.nearby(z)
        c = ws.calibration.difference_constant
        smoothed = ws.smoothed(config.eps[0])
        first = stats.finite(kernel_difference_ratio(ws.domain, smoothed, w, z, z_prime, c))
        second = stats.finite(kernel_difference_ratio_w(ws.domain, smoothed, w, ws.nearby(w), z, c))
        return {
            "C_diff_z": float(first.max(initial=0.0)),
            "C_diff_w": float(second.max(initial=0.0)),
            "C_diff": float(max(first.max(initial=0.0), second.max(initial=0.0))),
        }

    measured, trend = _refinement(config, constants, "C_diff")
    return CheckResult(
        measured=measured,
        key="C_diff",
        tolerance=EPS_STABILITY,
        passed=_stable_band(measured, trend),
        samples=2 * config.samples,
        mesh_trend=trend,
    )


def check_remainder_bound(config: RunConfig) -> CheckResult:
    def constants(ws: Workspace) -> Dict[str, float]:
        w, z = ws.boundary_pairs(config.samples)
        frames = frames_at(ws.domain, w)
        smoothed = ws.smoothed(config.eps[0])
        remainder = eval_remainder(ws.domain, smoothed, w, z, frames, leray_levi_density(ws.domain, frames))
        d = quasi_distance(ws.domain, w, z)
        return {"C_remainder": float(np.max(np.abs(remainder) * d ** (2 * ws.domain.dim_n - 1)))}

    measured, trend = _refinement(config, constants, "C_remainder")
    return CheckResult(
        measured=measured,
        key="C_remainder",
        tolerance=EPS_STABILITY,
        passed=_stable_band(measured, trend),
        samples=config.samples,
        mesh_trend=trend,
    )


# ============================================================================
# OPERADORES
# ============================================================================

def _truncated(ws: Workspace, eps: float, s: float, kind=KernelKind.TRUNCATED_ESSENTIAL) -> OperatorMatrix:
    spec = KernelSpec(kind=kind, eps=eps, s=s, measure=MeasureKind.LAMBDA)
    return assemble(spec, ws.mesh, ws.context(eps), AssemblyMode.PLAIN)


def _projection(ws: Workspace, weights: np.ndarray, measure: MeasureKind = MeasureKind.LAMBDA) -> OperatorMatrix:
    degree = choose_degree(ws.mesh, weights, ws.config.degree)
    return szego_project(ws.mesh, weights, build_hardy_basis(ws.mesh, degree), measure)


def _antisym_norm(ws: Workspace, eps: float, s: float) -> float:
    t = _truncated(ws, eps, s)
    return operator_norm(t.with_entries(t.entries - adjoint_lambda(t).entries), 2.0)[1]


def check_antisym_trend(config: RunConfig) -> CheckResult:
    ws = build_workspace(config)
    eps_values = sorted(config.eps)
    norms = [_antisym_norm(ws, eps, ws.truncation(eps)) for eps in eps_values]
    slope, _ = stats.loglog_slope(eps_values, norms)
    s_norms = [_antisym_norm(ws, eps_values[-1], s) for s in ws.s_halvings(eps_values[-1])]
    measured = {
        "slope": slope,
        "norm_max": max(norms),
        "decreasing_with_s": float(stats.monotone_decreasing(s_norms)),
    }
    trend = [(config.resolution, norms[0])]
    if config.resolution != config.trend_resolutions()[0]:
        coarse = build_workspace(config, config.trend_resolutions()[0])
        trend.insert(0, (coarse.resolution, _antisym_norm(coarse, eps_values[0], coarse.truncation(eps_values[0]))))

    tolerance = 0.4
    shrinks = max(s_norms) < ROUNDOFF_FLOOR or stats.monotone_decreasing(s_norms)
    measured["norm_max_s"] = max(s_norms)
    if ws.domain.has_global_levi:
        # nucleo simetrico: solo redondeo
        passed = max(norms) < ROUNDOFF_FLOOR and shrinks
    else:
        passed = np.isfinite(slope) and slope >= tolerance and shrinks
    return CheckResult(
        measured=measured,
        key="norm_max",
        tolerance=tolerance,
        passed=bool(passed),
        samples=ws.mesh.size ** 2,
        mesh_trend=trend,
    )


def _identity_operators(ws: Workspace, eps: float) -> Tuple[OperatorMatrix, OperatorMatrix, np.ndarray]:
    """(P, C^#, base de prueba) sobre la malla del workspace"""
    p = _projection(ws, ws.mesh.lambda_weights)
    c = cauchy_operator(ws.mesh, ws.context(eps), eps, p)
    test = smooth_test_basis(ws.mesh, ws.mesh.lambda_weights, TEST_DEGREE)
    return p, c, test


def _tolerance_gate(values: List[float], tolerance: float) -> bool:
    """Bajo la tolerancia y decreciente, salvo que ambos valores esten ya en el suelo"""
    floor = stats.TREND_FLOOR * tolerance
    settled = all(v <= floor for v in values)
    return bool(values[-1] < tolerance and (settled or stats.monotone_decreasing(values)))


def _identity_c(ws: Workspace) -> Dict[str, float]:
    p, c, test = _identity_operators(ws, ws.config.eps[0])
    residual = identity_c_residual(p, c)
    return {
        "residual_full": weighted_two_norm(residual, ws.mesh.lambda_weights),
        "residual_restricted": restricted_norm(residual, ws.mesh.lambda_weights, test),
        "extrapolated": float(supports_extrapolation(ws.mesh)),
    }


def check_identity_c(config: RunConfig) -> CheckResult:
    trend = []
    measured = {}
    for res in config.trend_resolutions():
        ws = build_workspace(config, res)
        measured = _identity_c(ws)
        trend.append((res, measured["residual_restricted"]))
    values = [v for _, v in trend]
    tolerance = 1e-4
    if measured["extrapolated"]:
        passed = _tolerance_gate(values, tolerance)
    else:
        passed = bool(np.all(np.isfinite(values)) and stats.monotone_decreasing(values))
    return CheckResult(
        measured=measured,
        key="residual_restricted",
        tolerance=tolerance,
        passed=bool(passed),
        samples=ws.mesh.size,
        mesh_trend=trend,
    )


def _szego_identities(ws: Workspace) -> Dict[str, float]:
    p, c, test = _identity_operators(ws, ws.config.eps[0])
    cp, pc = szego_identities(p, c)
    weights = ws.mesh.lambda_weights
    measured = {
        "CS_minus_S_full": weighted_two_norm(cp, weights),
        "SC_minus_C_full": weighted_two_norm(pc, weights),
        "CS_minus_S": restricted_norm(cp, weights, test),
        "SC_minus_C": restricted_norm(pc, weights, test),
        "extrapolated": float(supports_extrapolation(ws.mesh)),
    }
    measured["worst"] = max(measured["CS_minus_S"], measured["SC_minus_C"])
    return measured


def check_szego_identities(config: RunConfig) -> CheckResult:
    trend = []
    measured = {}
    for res in config.trend_resolutions():
        ws = build_workspace(config, res)
        measured = _szego_identities(ws)
        trend.append((res, measured["worst"]))
    values = [v for _, v in trend]
    tolerance = 1e-2
    if measured["extrapolated"]:
        passed = _tolerance_gate(values, tolerance)
    else:
        passed = bool(np.all(np.isfinite(values)) and stats.monotone_decreasing(values))
    return CheckResult(
        measured=measured,
        key="worst",
        tolerance=tolerance,
        passed=bool(passed),
        samples=ws.mesh.size,
        mesh_trend=trend,
    )


def _inversion_error(ws: Workspace) -> Tuple[float, float]:
    eps = INVERSION_EPS
    p, c, test = _identity_operators(ws, eps)
    c_trunc = _truncated(ws, eps, ws.truncation(eps))
    rebuilt, residual, _ = reconstruct_szego(c, c_trunc, p)
    weights = ws.mesh.lambda_weights
    rel = restricted_norm(rebuilt - p.entries, weights, test) / restricted_norm(p.entries, weights, test)
    return rel, residual


def check_inversion_621(config: RunConfig) -> CheckResult:
    trend = []
    neumann_residual = float("nan")
    tolerance = 1e-3
    try:
        for res in config.trend_resolutions():
            ws = build_workspace(config, res)
            rel, neumann_residual = _inversion_error(ws)
            trend.append((res, rel))
    except DivergenceRiskError as e:
        logger.warning(f"inversion_621: {e}")
        return CheckResult(
            measured={"relative_error": None, "divergence_risk": 1.0, "eps": INVERSION_EPS},
            key="relative_error",
            tolerance=tolerance,
            passed=False,
            samples=0,
            mesh_trend=trend,
        )
    values = [v for _, v in trend]
    extrapolated = supports_extrapolation(ws.mesh)
    if extrapolated:
        passed = _tolerance_gate(values, tolerance)
    else:
        passed = bool(np.all(np.isfinite(values)) and stats.monotone_decreasing(values))
    return CheckResult(
        measured={
            "relative_error": values[-1],
            "neumann_residual": neumann_residual,
            "eps": INVERSION_EPS,
            "extrapolated": float(extrapolated),
        },
        key="relative_error",
        tolerance=tolerance,
        passed=bool(passed),
        samples=ws.mesh.size,
        mesh_trend=trend,
    )


def _gamma_for(ws: Workspace, s: float) -> float:
    """Lado de cubo con |w - z| < gamma en el soporte delta < s"""
    d, off, euclid = _pilot_distances(ws)
    c_lower = float(np.max(euclid[off] / d[off]))
    return 1.01 * c_lower * s


def check_commutator_trend(config: RunConfig) -> CheckResult:
    ws = build_workspace(config)
    eps = max(config.eps)
    phi = build_phi(ws.mesh, ws.phi_family(), config.phi_a)
    scales = ws.s_halvings(eps)
    support = min(ws.support_nodes(s) for s in scales)
    norms, bounds = [], []
    for s in scales:
        comm = commutator(_truncated(ws, eps, s), phi)
        norms.append(operator_norm(comm, 2.0)[1])
        bounds.append(cube_partition_bound(comm, ws.mesh, _gamma_for(ws, s))[0])
    ratios = [norms[k] / norms[k + 1] for k in range(len(norms) - 1) if norms[k + 1] > 0]
    min_ratio = min(ratios) if ratios else float("inf")
    bounded = all(nv <= bv * (1 + 1e-9) for nv, bv in zip(norms, bounds))
    resolved = support >= SUPPORT_MIN_NODES
    if not resolved:
        logger.warning(f"commutator_trend: cut-off support holds {support:.0f} nodes at s={scales[-1]:.3f}")
    return CheckResult(
        measured={
            "min_halving_ratio": min_ratio,
            "norm_largest_s": norms[0],
            "bounded_by_cubes": float(bounded),
            "s_smallest": scales[-1],
            "support_nodes": support,
        },
        key="min_halving_ratio",
        tolerance=2.0,
        passed=bool(resolved and min_ratio >= 2.0 and bounded),
        samples=len(norms),
    )


def check_cube_bound(config: RunConfig) -> CheckResult:
    ws = build_workspace(config)
    eps = max(config.eps)
    count = 3 ** (2 * config.domain.n)
    ratios, hypothesis = [], True
    for s in ws.s_halvings(eps):
        t = _truncated(ws, eps, s)
        bound, ok = cube_partition_bound(t, ws.mesh, _gamma_for(ws, s))
        exact = operator_norm(t, 2.0)[1]
        hypothesis = hypothesis and ok
        if exact > 0:
            ratios.append(bound / exact)
    lo = min(ratios) if ratios else float("nan")
    hi = max(ratios) if ratios else float("nan")
    return CheckResult(
        measured={"ratio_min": lo, "ratio_max": hi, "N": float(count), "hypothesis_i": float(hypothesis)},
        key="ratio_min",
        tolerance=float(count),
        passed=bool(hypothesis and ratios and lo >= 1.0 - 1e-9 and hi <= count * (1 + 1e-9)),
        samples=len(ratios),
    )


def _remainder(ws: Workspace, eps: float) -> OperatorMatrix:
    """C^1 - nucleo esencial: nucleo acotado por delta^(-2n+1)"""
    ctx = ws.context(eps)
    density = assemble(KernelSpec(kind=KernelKind.CF_DENSITY, eps=eps, measure=MeasureKind.SIGMA), ws.mesh, ctx)
    essential = assemble(KernelSpec(kind=KernelKind.ESSENTIAL, eps=eps, measure=MeasureKind.LAMBDA), ws.mesh, ctx)
    return essential.with_entries(density.entries - essential.entries, label="remainder")


def check_schur(config: RunConfig) -> CheckResult:
    """
    Normas crudas del resto frente a la interpolacion de Riesz-Thorin
    ||R||_2 <= sqrt(||R||_1 ||R||_inf) y frente a la cota de Schur.
    """
    eps = config.eps[0]
    trend = []
    measured = {}
    for res in config.trend_resolutions():
        ws = build_workspace(config, res)
        remainder = _remainder(ws, eps)
        one = operator_norm(remainder, 1.0)[1]
        two = operator_norm(remainder, 2.0)[1]
        inf = operator_norm(remainder, np.inf)[1]
        schur = schur_constants(remainder)
        interpolated = float(np.sqrt(one * inf))
        measured = {
            "norm_1": one,
            "norm_2": two,
            "norm_inf": inf,
            "riesz_thorin": interpolated,
            "schur_row": schur.row,
            "schur_column": schur.column,
            "schur_bound": schur.bound,
            "rt_ratio": two / interpolated if interpolated > SCHUR_FLOOR else 0.0,
        }
        trend.append((res, schur.row))
    slack = 1e-9 * max(measured["schur_bound"], SCHUR_FLOOR)
    passed = (
        np.isfinite(measured["schur_row"])
        and np.isfinite(measured["schur_column"])
        and measured["norm_2"] <= measured["riesz_thorin"] + slack
        and measured["norm_2"] <= measured["schur_bound"] + slack
    )
    return CheckResult(
        measured=measured,
        key="rt_ratio",
        tolerance=1.0,
        passed=bool(passed),
        samples=ws.mesh.size ** 2,
        mesh_trend=trend,
    )


def check_dagger_smallness(config: RunConfig) -> CheckResult:
    """
    ||T - T^dagger|| <= ||T - T*|| + max|1/phi| ||[T, phi]|| con T = T^{s_eps}_eps,
    s_eps = s(eps) (eps / eps_max)^(1/2) acotada por debajo por HALVING_FLOOR * h.
    La diferencia no debe crecer al bajar eps.
    """
    ws = build_workspace(config)
    phi = build_phi(ws.mesh, ws.phi_family(), config.phi_a)
    eps_values = sorted(config.eps, reverse=True)
    floor = HALVING_FLOOR * mesh_scale(ws.mesh)
    measured = {}
    slacks, gaps = [], []
    for eps in eps_values:
        s = max(ws.truncation(eps) * np.sqrt(eps / eps_values[0]), floor)
        t = _truncated(ws, eps, s)
        star = adjoint_lambda(t)
        dagger = adjoint_dagger(t, phi)
        lhs = operator_norm(t.with_entries(t.entries - dagger.entries), 2.0)[1]
        antisym = operator_norm(t.with_entries(t.entries - star.entries), 2.0)[1]
        comm = operator_norm(commutator(t, phi), 2.0)[1]
        rhs = antisym + float(np.max(1.0 / phi.phi)) * comm
        measured[f"dagger_eps{eps:g}"] = lhs
        measured[f"s_eps{eps:g}"] = s
        measured[f"slack_eps{eps:g}"] = rhs - lhs
        slacks.append(rhs - lhs)
        gaps.append(lhs)
    measured["min_slack"] = min(slacks)
    measured["C_dagger"] = max(g / np.sqrt(e) for g, e in zip(gaps, eps_values))
    shrinking = max(gaps) < ROUNDOFF_FLOOR or stats.monotone_decreasing(gaps, slack=1e-9)
    measured["decreasing_with_eps"] = float(shrinking)
    return CheckResult(
        measured=measured,
        key="min_slack",
        tolerance=0.0,
        passed=bool(measured["min_slack"] >= -1e-10 and shrinking),
        samples=len(eps_values),
    )


def check_weighted_projection(config: RunConfig) -> CheckResult:
    ws = build_workspace(config)
    rng = np.random.default_rng(config.seed)
    size = ws.mesh.size
    t = assemble(KernelSpec(kind=KernelKind.ESSENTIAL, eps=config.eps[0]), ws.mesh, ws.context(config.eps[0]))
    measured = {}
    worst_projection, worst_adjoint = 0.0, 0.0
    for family in (PhiFamily.RE1, PhiFamily.ABS1):
        phi = build_phi(ws.mesh, family, config.phi_a)
        omega = phi.weights(ws.mesh)
        p = _projection(ws, omega, MeasureKind.OMEGA)
        idempotent = weighted_two_norm(p.entries @ p.entries - p.entries, omega)
        adjoint = (p.entries.conj().T * omega[None, :]) / omega[:, None]
        self_adjoint = weighted_two_norm(p.entries - adjoint, omega)
        dagger = adjoint_dagger(t, phi).entries
        errors = []
        for _ in range(10):
            f1 = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            f2 = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            lhs = omega_inner(dagger @ f1, f2, omega)
            rhs = omega_inner(f1, t.entries @ f2, omega)
            errors.append(abs(lhs - rhs) / max(abs(rhs), 1e-300))
        measured[f"idempotent_{family.value}"] = idempotent
        measured[f"self_adjoint_{family.value}"] = self_adjoint
        measured[f"adjoint_identity_{family.value}"] = max(errors)
        worst_projection = max(worst_projection, idempotent, self_adjoint)
        worst_adjoint = max(worst_adjoint, max(errors))
    return CheckResult(
        measured=measured,
        key=f"idempotent_{PhiFamily.RE1.value}",
        tolerance=1e-8,
        passed=bool(worst_projection < 1e-8 and worst_adjoint < 1e-10),
        samples=20,
    )
