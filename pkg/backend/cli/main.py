"""
============================================================================
SZEGO-LAB - ENTRY POINT
============================================================================
Comandos:
    mesh     construye la malla de frontera y la guarda en JSON
    project  ensambla C^#, truncaciones y proyecciones de Szego
    norms    cotas (inferior, superior) de ||T||_p de un fichero de matriz
    verify   ejecuta verificaciones nombradas; codigo de salida = fallos
    report   curvas de tendencia en CSV + graficos PNG

Todos los artefactos llevan el hash de la configuracion; los ficheros con
un hash distinto se rechazan mostrando ambos.
============================================================================
"""

import argparse
import json
import logging
import math
import os
import sys
from typing import List, Optional, Sequence

# Configurar path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from pydantic import ValidationError

from common.config import settings
from common.errors import ConfigurationError, HashMismatchError, SzegoLabError
from common.observability import write_metrics
from common.schemas import (
    AssemblyMode,
    KernelKind,
    KernelSpec,
    MeasureKind,
    PhiFamily,
    RunConfig,
    VerificationReport,
)
from domain.catalog import build_domain
from mesh.boundary_mesh import BoundaryMesh, build_mesh
from mesh.io import load_mesh, save_mesh
from operators.io import load_matrix, save_matrix
from operators.matrices import assemble, build_hardy_basis, build_phi
from operators.norms import operator_norm
from operators.szego import cauchy_operator, choose_degree, szego_project
from verify.registry import (
    available_checks,
    load_reports,
    run_checks,
    write_reports_json,
    write_summary_csv,
    write_trend_csv,
)
from verify.workspace import build_workspace

try:
    import matplotlib
    matplotlib.use('Agg')  # Sin display
    import matplotlib.pyplot as plt
    MATPLOTLIB_AVAILABLE = True
except ImportError:
    MATPLOTLIB_AVAILABLE = False

logger = logging.getLogger("szego_lab")

EXIT_ERROR = 2
EXACT_P = (1.0, 2.0, math.inf)


# ============================================================================
# CONFIGURACION
# ============================================================================

def _floats(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigurationError(f"expected comma-separated numbers, got '{text}'") from e


def _parse_p(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        p = float(text)
    except ValueError as e:
        raise ConfigurationError(f"invalid exponent p '{text}'") from e
    if not p >= 1.0:
        raise ConfigurationError(f"p must be >= 1, got {p}")
    return p


def build_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig a partir de los flags; errores de validacion -> ConfigurationError"""
    domain = {"name": args.domain, "n": args.n, "kappa": args.kappa}
    if args.a is not None:
        domain["a"] = tuple(_floats(args.a))
    if args.mu is not None:
        domain["mu"] = args.mu

    values = {
        "resolution": args.resolution,
        "degree": args.degree,
        "measure": args.measure,
        "phi": args.phi,
        "phi_a": args.phi_a,
        "seed": args.seed,
        "out_dir": args.out_dir,
        "mesh_path": args.mesh,
    }
    if args.eps is not None:
        values["eps"] = tuple(_floats(args.eps))
    if args.s_schedule is not None:
        parts = _floats(args.s_schedule)
        if len(parts) != 2:
            raise ConfigurationError(f"--s-schedule expects 's0,halvings', got '{args.s_schedule}'")
        values["s_schedule"] = {"s0": parts[0], "halvings": int(parts[1])}
    if getattr(args, "samples", None) is not None:
        values["samples"] = args.samples

    try:
        return RunConfig(domain=domain, **values)
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration: {e}") from e


def _check_hash(expected: str, found: str, what: str) -> None:
    if found != expected:
        print(f"config hash: {expected}", file=sys.stderr)
        print(f"{what} hash: {found}", file=sys.stderr)
        raise HashMismatchError(expected, found, what)


def _load_checked_mesh(config: RunConfig) -> BoundaryMesh:
    mesh, found = load_mesh(config.mesh_path)
    _check_hash(config.config_hash(), found, "mesh")
    return mesh


def _output_path(config: RunConfig, name: str) -> str:
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, name)


# ============================================================================
# COMANDOS
# ============================================================================

def cmd_mesh(config: RunConfig, out: Optional[str] = None) -> str:
    domain = build_domain(config.domain)
    mesh = build_mesh(domain, config.resolution, config.domain)
    path = out or _output_path(config, "mesh.json")
    save_mesh(mesh, path, config.config_hash())
    return path


def cmd_project(config: RunConfig, out: Optional[str] = None) -> List[str]:
    """
    P para cada medida, C^# y C^{#,s(eps)} por eps.

    Con `out`, la proyeccion de la medida de la configuracion se escribe
    ademas en esa ruta.
    """
    if config.mesh_path is not None:
        _load_checked_mesh(config)
    ws = build_workspace(config)
    digest = config.config_hash()
    written = []

    def _save(matrix, path: str) -> None:
        save_matrix(matrix, path, digest)
        written.append(path)

    phi = build_phi(ws.mesh, config.phi, config.phi_a)
    projections = {}
    for measure in MeasureKind:
        weights = ws.mesh.weights(measure, phi.phi)
        degree = choose_degree(ws.mesh, weights, config.degree)
        if degree < config.degree:
            logger.warning(f"degree lowered to {degree} for measure {measure.value} (Gram condition)")
        projections[measure] = szego_project(ws.mesh, weights, build_hardy_basis(ws.mesh, degree), measure)
        _save(projections[measure], _output_path(config, f"P_{measure.value}.mat"))
    if out is not None:
        _save(projections[config.measure], out)

    for eps in config.eps:
        context = ws.context(eps)
        _save(cauchy_operator(ws.mesh, context, eps, projections[MeasureKind.LAMBDA]), _output_path(config, f"C_eps{eps:g}.mat"))
        truncated = assemble(
            KernelSpec(kind=KernelKind.TRUNCATED_ESSENTIAL, eps=eps, s=ws.truncation(eps), measure=MeasureKind.LAMBDA),
            ws.mesh, context, AssemblyMode.PLAIN,
        )
        _save(truncated, _output_path(config, f"Cs_eps{eps:g}.mat"))
    return written


def cmd_norms(matrix_path: str, p: float, out_dir: str) -> dict:
    matrix, digest = load_matrix(matrix_path)
    mode = "exact" if p in EXACT_P else "interpolate"
    lower, upper = operator_norm(matrix, p, mode)
    result = {
        "matrix": matrix.name,
        "p": "inf" if math.isinf(p) else p,
        "mode": mode,
        "lower": lower,
        "upper": upper,
        "config_hash": digest,
    }
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(matrix_path))[0]
    path = os.path.join(out_dir, f"norms_{stem}_p{result['p']}.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(result, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(json.dumps(result, sort_keys=True))
    return result


def cmd_verify(config: RunConfig, names: Optional[Sequence[str]]) -> int:
    """Ejecuta las verificaciones; devuelve el numero de fallos (max 255)"""
    if config.mesh_path is not None:
        _load_checked_mesh(config)
    reports = run_checks(names, config)
    write_reports_json(reports, _output_path(config, "reports.json"))
    write_summary_csv(reports, _output_path(config, "summary.csv"))
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.check_name:<20} {r.key_constant}={r.measured.get(r.key_constant)}")
    return min(sum(not r.passed for r in reports), 255)


def _plot_trend(report: VerificationReport, path: str) -> None:
    points = [(res, v) for res, v in report.mesh_trend if v is not None]
    fig, ax = plt.subplots(figsize=(5, 3.5), dpi=100)
    ax.plot([p[0] for p in points], [p[1] for p in points], marker="o", color="#2c3e50")
    if points and all(v > 0 for _, v in points):
        ax.set_yscale("log")
    ax.set_xlabel("resolution")
    ax.set_ylabel(report.key_constant or "value")
    ax.set_title(report.check_name, fontsize=10, fontweight="bold")
    ax.grid(True, alpha=0.3)
    plt.tight_layout()
    plt.savefig(path, format="png", dpi=100)
    plt.close(fig)


def cmd_report(config: RunConfig, reports_path: Optional[str] = None) -> List[str]:
    """CSV de tendencias (+ PNG por verificacion) a partir de reports.json"""
    reports_path = reports_path or os.path.join(config.out_dir, "reports.json")
    try:
        reports = load_reports(reports_path)
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"cannot read reports {reports_path}: {e}") from e
    for r in reports:
        _check_hash(config.config_hash(), r.config_hash, f"report '{r.check_name}'")

    written = [_output_path(config, "trend.csv")]
    write_trend_csv(reports, written[0])
    if not MATPLOTLIB_AVAILABLE:
        logger.warning("matplotlib not available, skipping trend plots")
        return written
    plot_dir = _output_path(config, "plots")
    os.makedirs(plot_dir, exist_ok=True)
    for r in reports:
        if any(v is not None for _, v in r.mesh_trend):
            path = os.path.join(plot_dir, f"{r.check_name}.png")
            _plot_trend(r, path)
            written.append(path)
    logger.info(f"Report written: {len(written)} files in {config.out_dir}")
    return written


# ============================================================================
# ARGUMENTOS
# ============================================================================

def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--domain", default="ball", choices=["ball", "ellipsoid", "perturbed_ball"])
    parser.add_argument("--n", type=int, default=2, help="dimension compleja")
    parser.add_argument("--a", default=None, help="coeficientes del elipsoide, separados por comas")
    parser.add_argument("--kappa", type=float, default=0.1)
    parser.add_argument("--mu", type=float, default=None)
    parser.add_argument("--resolution", type=int, default=16)
    parser.add_argument("--eps", default=None, help="lista de eps, p.ej. 0.1,0.01,0.001")
    parser.add_argument("--s-schedule", default=None, help="'s0,halvings'")
    parser.add_argument("--degree", type=int, default=6)
    parser.add_argument("--measure", default="lambda", choices=[m.value for m in MeasureKind])
    parser.add_argument("--phi", default="const", choices=[f.value for f in PhiFamily])
    parser.add_argument("--phi-a", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=settings.SZEGO_SEED)
    parser.add_argument("--out-dir", default=settings.SZEGO_OUT_DIR)
    parser.add_argument("--mesh", default=None, help="malla JSON generada con la misma configuracion")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="szego-lab",
        description="Nucleos de Cauchy-Fantappie y proyeccion de Cauchy-Szego en dominios estrictamente pseudoconvexos",
    )
    parser.add_argument("--log-level", default=settings.SZEGO_LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="construir la malla de frontera")
    _add_config_flags(mesh)
    mesh.add_argument("--out", default=None)

    project = sub.add_parser("project", help="ensamblar C^#, truncaciones y proyecciones")
    _add_config_flags(project)
    project.add_argument("--out", default=None, help="ruta adicional para P de la medida elegida")

    norms = sub.add_parser("norms", help="normas L^p de un fichero de matriz")
    norms.add_argument("--matrix", required=True)
    norms.add_argument("--p", default="2")
    norms.add_argument("--out-dir", default=settings.SZEGO_OUT_DIR)

    verify = sub.add_parser("verify", help="ejecutar verificaciones nombradas")
    _add_config_flags(verify)
    verify.add_argument("--checks", default="all", help=f"'all' o lista separada por comas de {available_checks()}")
    verify.add_argument("--samples", type=int, default=None)

    report = sub.add_parser("report", help="curvas de tendencia CSV + PNG")
    _add_config_flags(report)
    report.add_argument("--reports", default=None, help="reports.json (por defecto en --out-dir)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format='%(asctime)s [%(levelname)s] %(name)s: %(message)s'
    )

    try:
        if args.command == "norms":
            cmd_norms(args.matrix, _parse_p(args.p), args.out_dir)
            code = 0
        else:
            config = build_config(args)
            logger.info(f"Config hash {config.config_hash()} ({config.domain.name.value}, resolution {config.resolution})")
            if args.command == "mesh":
                cmd_mesh(config, args.out)
                code = 0
            elif args.command == "project":
                cmd_project(config, args.out)
                code = 0
            elif args.command == "verify":
                names = [name.strip() for name in args.checks.split(",") if name.strip()]
                code = cmd_verify(config, names)
            else:
                cmd_report(config, args.reports)
                code = 0
    except SzegoLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        code = EXIT_ERROR

    write_metrics(settings.SZEGO_METRICS_FILE)
    return code


if __name__ == "__main__":
    sys.exit(main())
