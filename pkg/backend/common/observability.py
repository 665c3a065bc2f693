"""
============================================================================
OBSERVABILITY MODULE - Prometheus metrics for batch runs
============================================================================
Metrics for matrix assembly, kernel refusals and verification checks.
Batch CLI runs export them through a textfile (node-exporter collector).
============================================================================
"""

import logging
import time
from functools import wraps
from typing import Callable, Optional

from prometheus_client import REGISTRY, Counter, Gauge, Histogram, write_to_textfile

logger = logging.getLogger(__name__)

# ============================================================================
# CUSTOM METRICS - Computational Domain
# ============================================================================

# Assembly metrics
MATRICES_ASSEMBLED = Counter(
    'szego_matrices_assembled_total',
    'Total number of operator matrices assembled',
    ['kind', 'mode']
)

ASSEMBLY_DURATION = Histogram(
    'szego_assembly_duration_seconds',
    'Operator matrix assembly time in seconds',
    ['kind'],
    buckets=[0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 30.0, 120.0]
)

MATRIX_SIZE = Gauge(
    'szego_matrix_nodes',
    'Number of nodes of the last assembled matrix',
    ['kind']
)

# Kernel metrics
NEAR_SINGULAR_REFUSALS = Counter(
    'szego_near_singular_refusals_total',
    'Kernel evaluations refused below the |g| floor',
    ['kind']
)

# Verification metrics
CHECKS_RUN = Counter(
    'szego_checks_total',
    'Total verification checks executed',
    ['check', 'status']
)

CHECK_DURATION = Histogram(
    'szego_check_duration_seconds',
    'Verification check time in seconds',
    ['check'],
    buckets=[0.1, 0.5, 1.0, 5.0, 30.0, 120.0, 600.0]
)

CHECK_CONSTANT = Gauge(
    'szego_check_key_constant',
    'Key measured constant of the last run of a check',
    ['check']
)

# Mesh metrics
MESH_NODES = Gauge(
    'szego_mesh_nodes',
    'Number of boundary nodes of the last built mesh',
    ['domain']
)


# ============================================================================
# HELPERS
# ============================================================================

def record_assembly(kind: str, mode: str, nodes: int, duration: float):
    """Record one operator matrix assembly."""
    MATRICES_ASSEMBLED.labels(kind=kind, mode=mode).inc()
    ASSEMBLY_DURATION.labels(kind=kind).observe(duration)
    MATRIX_SIZE.labels(kind=kind).set(nodes)


def record_check(check: str, passed: bool, duration: float, key_value: Optional[float] = None):
    """Record one verification check outcome."""
    status = "passed" if passed else "failed"
    CHECKS_RUN.labels(check=check, status=status).inc()
    CHECK_DURATION.labels(check=check).observe(duration)
    if key_value is not None:
        CHECK_CONSTANT.labels(check=check).set(key_value)


def record_refusal(kind: str):
    """Record a near-singular kernel refusal."""
    NEAR_SINGULAR_REFUSALS.labels(kind=kind).inc()


def record_mesh(domain: str, nodes: int):
    """Record a built mesh."""
    MESH_NODES.labels(domain=domain).set(nodes)


def track_duration(histogram: Histogram, **labels):
    """
    Decorator to time a function into a histogram.

    Usage:
        @track_duration(ASSEMBLY_DURATION, kind="essential")
        def build():
            ...
    """
    def decorator(func: Callable):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                histogram.labels(**labels).observe(time.perf_counter() - start)
        return wrapper
    return decorator


def write_metrics(path: str) -> bool:
    """
    Write all registered metrics in Prometheus text format.

    Returns:
        True if the file was written
    """
    if not path:
        return False
    try:
        write_to_textfile(path, REGISTRY)
        logger.info(f"Metrics written to {path}")
        return True
    except OSError as e:
        logger.warning(f"Failed to write metrics to {path}: {e}")
        return False
