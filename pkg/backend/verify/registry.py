"""
============================================================================
REGISTRO DE VERIFICACIONES
============================================================================
nombre -> funcion de verificacion. Cada nombre tiene exactamente un ancla en
common.schemas.CHECK_ANCHORS; el registro es el mapa ejecutable de
estimaciones comprobadas.

run_checks ejecuta verificaciones independientes en paralelo y devuelve los
informes en el orden del registro (salida identica byte a byte).
============================================================================
"""

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence

import pandas as pd

from common.config import settings
from common.errors import SzegoLabError, UnknownCheckError
from common.observability import record_check
from common.schemas import RunConfig, VerificationReport, get_check_anchor
from verify import checks, stats
from verify.checks import CheckResult

logger = logging.getLogger(__name__)

CHECKS: Dict[str, Callable[[RunConfig], CheckResult]] = {
    "prop1_interior": checks.check_prop1_interior,
    "prop1_boundary": checks.check_prop1_boundary,
    "quasi_sym": checks.check_quasi_sym,
    "quasi_tri": checks.check_quasi_tri,
    "dist_bracket": checks.check_dist_bracket,
    "ball_measure": checks.check_ball_measure,
    "int_beta": checks.check_int_beta,
    "int_log": checks.check_int_log,
    "corollary2": checks.check_corollary2,
    "reproducing": checks.check_reproducing,
    "holder_rate": checks.check_holder_rate,
    "eps_symmetry": checks.check_eps_symmetry,
    "diff_413": checks.check_diff_413,
    "antisym_trend": checks.check_antisym_trend,
    "identity_c": checks.check_identity_c,
    "inversion_621": checks.check_inversion_621,
    "commutator_trend": checks.check_commutator_trend,
    "cube_bound": checks.check_cube_bound,
    "schur": checks.check_schur,
    "lower_bound": checks.check_lower_bound,
    "eps_compare": checks.check_eps_compare,
    "leray_levi_mass": checks.check_leray_levi_mass,
    "remainder_bound": checks.check_remainder_bound,
    "g_difference": checks.check_g_difference,
    "szego_identities": checks.check_szego_identities,
    "dagger_smallness": checks.check_dagger_smallness,
    "weighted_projection": checks.check_weighted_projection,
}


def available_checks() -> List[str]:
    return list(CHECKS.keys())


def resolve_names(names: Optional[Sequence[str]]) -> List[str]:
    """'all' o None -> registro completo; nombres desconocidos -> error"""
    if not names or list(names) == ["all"]:
        return available_checks()
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise UnknownCheckError(f"unknown checks {unknown}; valid: {available_checks()}")
    order = {name: i for i, name in enumerate(CHECKS)}
    return sorted(dict.fromkeys(names), key=order.__getitem__)


def run_check(name: str, config: RunConfig) -> VerificationReport:
    """Ejecuta una verificacion y aplica la guarda de tendencia"""
    if name not in CHECKS:
        raise UnknownCheckError(f"unknown check '{name}'; valid: {available_checks()}")
    anchor = get_check_anchor(name)
    start = time.perf_counter()
    error = None
    try:
        result = CHECKS[name](config)
    except SzegoLabError as e:
        logger.error(f"{name}: {type(e).__name__}: {e}")
        error = f"{type(e).__name__}: {e}"
        result = CheckResult(measured={}, key="", tolerance=0.0, passed=False, samples=0)

    passed = result.passed
    if passed and stats.trend_moving(result.mesh_trend, result.tolerance):
        logger.warning(f"{name}: refinement trend still moving by more than 20%, marking as failed")
        passed = False

    duration = time.perf_counter() - start
    key_value = result.measured.get(result.key) if result.key else None
    record_check(name, passed, duration, key_value)
    logger.info(f"Check {name}: {'PASS' if passed else 'FAIL'} ({duration:.1f}s)")
    return VerificationReport(
        check_name=name,
        paper_anchor=anchor,
        samples=result.samples,
        measured=result.measured,
        tolerance=result.tolerance,
        passed=passed,
        mesh_trend=result.mesh_trend,
        domain=config.domain.name.value,
        config_hash=config.config_hash(),
        key_constant=result.key,
        error=error,
    )


def run_checks(names: Optional[Sequence[str]], config: RunConfig) -> List[VerificationReport]:
    """Verificaciones independientes en paralelo, informes en orden de registro"""
    selected = resolve_names(names)
    with ThreadPoolExecutor(max_workers=min(settings.thread_count, len(selected))) as pool:
        reports = list(pool.map(lambda name: run_check(name, config), selected))
    failed = sum(not r.passed for r in reports)
    logger.info(f"Verification finished: {len(reports) - failed}/{len(reports)} passed")
    return reports


# ============================================================================
# ESCRITURA DE INFORMES
# ============================================================================

def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_reports_json(reports: Sequence[VerificationReport], path: str) -> None:
    _ensure_parent(path)
    payload = [r.model_dump(mode="json") for r in reports]
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    logger.info(f"Reports written to {path}")


def summary_frame(reports: Sequence[VerificationReport]) -> pd.DataFrame:
    """(check, passed, key constant) por verificacion"""
    rows = []
    for r in reports:
        rows.append({
            "check": r.check_name,
            "passed": r.passed,
            "key": r.key_constant,
            "value": r.measured.get(r.key_constant),
            "tolerance": r.tolerance,
            "config_hash": r.config_hash,
        })
    return pd.DataFrame(rows, columns=["check", "passed", "key", "value", "tolerance", "config_hash"])


def write_summary_csv(reports: Sequence[VerificationReport], path: str) -> None:
    _ensure_parent(path)
    summary_frame(reports).to_csv(path, index=False, float_format="%.10g")
    logger.info(f"Summary written to {path}")


def trend_frame(reports: Sequence[VerificationReport]) -> pd.DataFrame:
    rows = [
        {"check": r.check_name, "resolution": res, "value": value, "config_hash": r.config_hash}
        for r in reports
        for res, value in r.mesh_trend
    ]
    return pd.DataFrame(rows, columns=["check", "resolution", "value", "config_hash"])


def write_trend_csv(reports: Sequence[VerificationReport], path: str) -> None:
    _ensure_parent(path)
    trend_frame(reports).to_csv(path, index=False, float_format="%.10g")
    logger.info(f"Trend curves written to {path}")


def load_reports(path: str) -> List[VerificationReport]:
    with open(path, "r", encoding="utf-8") as handle:
        return [VerificationReport(**item) for item in json.load(handle)]


