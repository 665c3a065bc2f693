"""
Tests de estadisticos, registro de verificaciones y escritura de informes
"""

import sys
import os

# Añadir path del backend
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pandas as pd
import pytest

from common.errors import DomainRejectedError, UnknownCheckError
from common.schemas import CHECK_ANCHORS, DomainSpec, RunConfig
from mesh.boundary_mesh import delta_max, mesh_scale
from verify import registry
from verify.checks import ROUNDOFF_FLOOR, SUPPORT_MIN_NODES, _stable_band, _tolerance_gate
from verify.stats import band, loglog_slope, monotone_decreasing, relative_spread, richardson, trend_moving
from verify.workspace import HALVING_FLOOR, build_workspace


# ============================================================================
# ESTADISTICOS
# ============================================================================

def test_loglog_slope_of_power_law():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    slope, r2 = loglog_slope(x, 3.0 * x ** 2)
    assert slope == pytest.approx(2.0)
    assert r2 == pytest.approx(1.0)
    assert np.isnan(loglog_slope([1.0], [1.0])[0]), "un solo punto no define pendiente"


def test_band_ignores_non_finite_and_non_positive():
    lo, hi, width = band([2.0, 4.0, np.nan, -1.0, np.inf])
    assert (lo, hi, width) == (2.0, 4.0, 2.0)
    assert np.isnan(band([np.nan])[2])
    assert relative_spread([2.0, 2.2, 1.9]) == pytest.approx(0.1)


def test_trend_guard():
    assert trend_moving([(8, 1.0), (12, 1.5)], 0.1), "un salto del 50% sigue moviendose"
    assert not trend_moving([(8, 1.0), (12, 1.1)], 0.1)
    # ambos valores bajo el 1% de la tolerancia: convergido
    assert not trend_moving([(8, 1e-5), (12, 5e-4)], 0.1)
    assert not trend_moving([(16, 3.0)], 0.1)
    assert not trend_moving([(8, None), (12, 1.0)], 0.1)


def test_richardson_and_monotonicity():
    assert richardson(1.0, 0.75) == pytest.approx(0.5)
    assert monotone_decreasing([3.0, 2.0, 1.0])
    assert not monotone_decreasing([1.0, 2.0])
    assert monotone_decreasing([1.0, 1.05], slack=0.1)


def test_tolerance_gate():
    assert _tolerance_gate([1e-3, 5e-5], 1e-4)
    assert not _tolerance_gate([5e-5, 8e-5], 1e-4), "bajo la tolerancia pero creciendo"
    # ambos en el suelo: el crecimiento es ruido de redondeo
    assert _tolerance_gate([1e-9, 3e-9], 1e-4)
    assert not _tolerance_gate([1e-3, 2e-4], 1e-4)


def test_stable_band():
    trend = [(8, 1.0), (12, 1.05)]
    assert _stable_band({"refinement_spread": 0.05}, trend)
    assert not _stable_band({"refinement_spread": 0.3}, [(8, 1.0), (12, 1.3)])
    assert _stable_band({"refinement_spread": 1.0}, [(8, 1e-12), (12, 5e-13)])
    assert not _stable_band({"refinement_spread": 0.0}, [(8, np.nan), (12, np.nan)])


# ============================================================================
# REGISTRO
# ============================================================================

def test_registry_covers_every_anchor():
    assert set(registry.available_checks()) == set(CHECK_ANCHORS)
    assert len(registry.available_checks()) == 27


def test_resolve_names():
    assert registry.resolve_names(None) == registry.available_checks()
    assert registry.resolve_names(["all"]) == registry.available_checks()
    # orden de registro y sin duplicados
    assert registry.resolve_names(["schur", "quasi_sym", "schur"]) == ["quasi_sym", "schur"]
    with pytest.raises(UnknownCheckError):
        registry.resolve_names(["quasi_sym", "lemma_42"])


def test_run_check_leray_levi_mass(small_config):
    report = registry.run_check("leray_levi_mass", small_config)
    assert report.passed, report.measured
    assert report.key_constant == "lambda_mass"
    assert report.measured["lambda_mass"] == pytest.approx(1.0, abs=1e-3)
    assert report.config_hash == small_config.config_hash()
    assert report.domain == "ball"
    assert report.paper_anchor == CHECK_ANCHORS["leray_levi_mass"]
    assert report.mesh_trend == [(8, report.measured["lambda_mass"])]


def test_run_check_is_deterministic(small_config):
    first = registry.run_check("leray_levi_mass", small_config)
    second = registry.run_check("leray_levi_mass", small_config)
    assert first.model_dump() == second.model_dump()


def test_run_check_records_failures(small_config, monkeypatch):
    def broken(config):
        raise DomainRejectedError("Levi form not positive")

    monkeypatch.setitem(registry.CHECKS, "quasi_sym", broken)
    report = registry.run_check("quasi_sym", small_config)
    assert not report.passed
    assert report.error.startswith("DomainRejectedError")
    assert report.measured == {}
    with pytest.raises(UnknownCheckError):
        registry.run_check("no_such_check", small_config)


def test_config_hash_ignores_output_paths(small_config, tmp_path):
    moved = small_config.model_copy(update={"out_dir": str(tmp_path / "elsewhere")})
    assert moved.config_hash() == small_config.config_hash()
    reseeded = RunConfig(**{**small_config.model_dump(), "seed": 5})
    assert reseeded.config_hash() != small_config.config_hash()
    assert len(small_config.config_hash()) == 16


def test_run_check_prop1_boundary_on_ball(small_config):
    report = registry.run_check("prop1_boundary", small_config)
    assert report.passed, report.measured
    assert report.measured["band_width"] < 20.0
    assert report.measured["eps_spread"] == pytest.approx(0.0, abs=1e-12)
    assert report.samples == int(report.measured["pairs"])


def test_band_constants_gate_on_refinement_stability(small_config):
    for name in ("dist_bracket", "eps_symmetry", "g_difference", "diff_413", "remainder_bound"):
        report = registry.run_check(name, small_config)
        assert report.tolerance == pytest.approx(0.1), name
        assert [res for res, _ in report.mesh_trend] == [8], name
        assert "refinement_spread" in report.measured, name


def test_run_check_schur_on_ball(small_config):
    report = registry.run_check("schur", small_config)
    assert report.passed, report.measured
    m = report.measured
    assert m["norm_2"] <= m["riesz_thorin"] * (1 + 1e-9) + 1e-300
    assert m["rt_ratio"] <= 1.0 + 1e-9
    assert m["schur_bound"] == pytest.approx(np.sqrt(m["schur_row"] * m["schur_column"]))


def test_run_check_antisym_trend_on_ball(small_config):
    report = registry.run_check("antisym_trend", small_config)
    assert report.passed, report.measured
    assert report.measured["norm_max"] < ROUNDOFF_FLOOR
    assert report.measured["norm_max_s"] < ROUNDOFF_FLOOR


def test_commutator_trend_requires_resolved_support(small_config):
    report = registry.run_check("commutator_trend", small_config)
    m = report.measured
    assert m["s_smallest"] >= HALVING_FLOOR * mesh_scale(build_workspace(small_config).mesh) * (1 - 1e-12)
    if m["support_nodes"] < SUPPORT_MIN_NODES:
        assert not report.passed


def test_dagger_smallness_scales_with_eps(small_config):
    config = small_config.model_copy(update={"eps": (0.1, 0.05)})
    report = registry.run_check("dagger_smallness", config)
    m = report.measured
    assert m["min_slack"] >= -1e-10
    assert m["s_eps0.05"] <= m["s_eps0.1"]
    assert set(m) >= {"dagger_eps0.1", "dagger_eps0.05", "C_dagger", "decreasing_with_eps"}


def test_holder_rate_uses_resolved_offsets(small_config):
    report = registry.run_check("holder_rate", small_config)
    m = report.measured
    assert m["finest_offset"] == pytest.approx(delta_max(build_workspace(small_config).domain) * 0.5 ** 6)
    assert np.isfinite(m["exponent"])
    # las diferencias decrecen con el desplazamiento
    assert m["exponent"] > 0
    assert report.tolerance == pytest.approx(0.2)


def test_perturbed_ball_checks(tmp_path):
    config = RunConfig(
        domain=DomainSpec(name="perturbed_ball", n=2, kappa=0.1, mu=0.5),
        resolution=8,
        eps=(0.1,),
        degree=2,
        samples=200,
        out_dir=str(tmp_path),
    )
    mass = registry.run_check("leray_levi_mass", config)
    assert mass.passed, mass.measured
    assert mass.measured["ratio_spread"] < 1e-8
    assert "mass_error" not in mass.measured
    lower = registry.run_check("lower_bound", config)
    assert lower.passed, lower.measured
    assert lower.measured["min_ratio"] > 0


def test_ball_acceptance_at_resolution_16(tmp_path):
    config = RunConfig(
        domain=DomainSpec(name="ball", n=2),
        resolution=16,
        eps=(0.1,),
        degree=4,
        samples=500,
        out_dir=str(tmp_path),
    )
    names = [
        "leray_levi_mass",
        "quasi_sym",
        "dist_bracket",
        "ball_measure",
        "identity_c",
        "szego_identities",
        "inversion_621",
        "schur",
    ]
    reports = {r.check_name: r for r in registry.run_checks(names, config)}
    for name in names:
        assert reports[name].passed, (name, reports[name].measured, reports[name].error)
    assert reports["ball_measure"].measured["slope"] == pytest.approx(4.0, abs=0.2)
    assert reports["identity_c"].measured["residual_restricted"] < 1e-4
    assert reports["inversion_621"].measured["relative_error"] < 1e-3
    assert [res for res, _ in reports["identity_c"].mesh_trend] == [12, 16]


# ============================================================================
# INFORMES
# ============================================================================

def test_report_writers(small_config, tmp_path):
    reports = registry.run_checks(["leray_levi_mass"], small_config)
    path = str(tmp_path / "nested" / "reports.json")
    registry.write_reports_json(reports, path)
    assert registry.load_reports(path) == reports

    summary_path = str(tmp_path / "summary.csv")
    registry.write_summary_csv(reports, summary_path)
    summary = pd.read_csv(summary_path)
    assert list(summary.columns) == ["check", "passed", "key", "value", "tolerance", "config_hash"]
    assert summary.loc[0, "key"] == "lambda_mass"
    assert bool(summary.loc[0, "passed"])

    trend = registry.trend_frame(reports)
    assert len(trend) == 1
    assert trend.loc[0, "resolution"] == 8


# ============================================================================
# WORKSPACE
# ============================================================================

def test_workspace_truncation_on_ball(small_config):
    ws = build_workspace(small_config)
    assert ws.resolution == 8
    assert ws.truncation(0.1) == pytest.approx(small_config.s_schedule.s0)
    halvings = ws.s_halvings(0.1)
    assert len(halvings) == small_config.s_schedule.halvings + 1
    assert halvings[1] == pytest.approx(0.5 * halvings[0])


def test_workspace_halvings_respect_mesh_floor(small_config):
    ws = build_workspace(small_config)
    floor = HALVING_FLOOR * mesh_scale(ws.mesh)
    halvings = ws.s_halvings(0.1)
    assert min(halvings) >= floor * (1 - 1e-12)
    assert halvings == sorted(halvings, reverse=True)
    counts = [ws.support_nodes(s) for s in halvings]
    assert all(c >= 0 for c in counts)
    assert counts == sorted(counts, reverse=True), "el soporte crece con s"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
