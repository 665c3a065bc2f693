"""
============================================================================
ESTADISTICOS DE VERIFICACION
============================================================================
- loglog_slope:   pendiente por minimos cuadrados en escala log-log
- band:           (min, max, max/min) de un cociente sobre muestras
- trend_moving:   guarda contra falsos positivos (>20% entre refinamientos)
- richardson:     extrapolacion de dos puntos h, h/2
============================================================================
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sp_stats

TREND_GUARD = 0.2
TREND_FLOOR = 0.01


def finite(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    return arr[np.isfinite(arr)]


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """(pendiente, R^2) del ajuste log y = a + b log x sobre valores positivos"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if np.count_nonzero(keep) < 2:
        return float("nan"), float("nan")
    fit = sp_stats.linregress(np.log(x[keep]), np.log(y[keep]))
    return float(fit.slope), float(fit.rvalue ** 2)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """(pendiente, ordenada, R^2)"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y)
    if np.count_nonzero(keep) < 2:
        return float("nan"), float("nan"), float("nan")
    fit = sp_stats.linregress(x[keep], y[keep])
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)


def band(ratios) -> Tuple[float, float, float]:
    """(min, max, ancho max/min) de cocientes positivos finitos"""
    values = finite(ratios)
    values = values[values > 0]
    if values.size == 0:
        return float("nan"), float("nan"), float("nan")
    lo, hi = float(values.min()), float(values.max())
    return lo, hi, hi / lo


def relative_spread(values) -> float:
    """max |v - v_0| / |v_0| respecto del primer valor"""
    values = finite(values)
    if values.size < 2 or values[0] == 0:
        return 0.0
    return float(np.max(np.abs(values - values[0])) / abs(values[0]))


def trend_moving(trend: List[Tuple[int, Optional[float]]], tolerance: float) -> bool:
    """
    True si el ultimo paso de refinamiento cambia el valor mas de un 20%.

    Valores por debajo del 1% de la tolerancia se consideran convergidos.
    """
    values = [v for _, v in trend if v is not None and np.isfinite(v)]
    if len(values) < 2:
        return False
    prev, last = values[-2], values[-1]
    floor = TREND_FLOOR * abs(tolerance)
    if abs(prev) <= floor and abs(last) <= floor:
        return False
    return abs(last - prev) > TREND_GUARD * max(abs(prev), floor)


def richardson(value_h: np.ndarray, value_half: np.ndarray) -> np.ndarray:
    """2 F(h/2) - F(h): orden uno en h"""
    return 2.0 * np.asarray(value_half) - np.asarray(value_h)


def monotone_decreasing(values: Sequence[float], slack: float = 0.0) -> bool:
    values = finite(values)
    return bool(np.all(np.diff(values) <= slack * np.abs(values[:-1])))
