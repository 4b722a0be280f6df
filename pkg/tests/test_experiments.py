import math

import numpy as np
import pytest

from invmet import discs, experiments
from invmet.errors import DomainError, EvaluationError
from invmet.experiments import SweepConfig, SweepRecord
from invmet.oracle import OracleConfig


def _closed(profile, estimator, **kwargs):
    return experiments.sweep(SweepConfig(profile=profile, estimators=(estimator,), workers=1, **kwargs))


def test_fit_exact_power():
    deltas = experiments.default_deltas(8)
    fit = experiments.fit_points(deltas, [d ** -0.75 for d in deltas])
    assert fit.slope == pytest.approx(-0.75, abs=1e-10)
    assert not fit.dropped
    assert fit.n_points == 8


def test_fit_constant_data():
    deltas = experiments.default_deltas(6)
    assert experiments.fit_points(deltas, [2.0] * 6).slope == pytest.approx(0.0, abs=1e-12)


def test_fit_needs_four_points():
    with pytest.raises(EvaluationError):
        experiments.fit_points([1e-3, 1e-2, 1e-1], [1.0, 2.0, 3.0])


def test_fit_drops_preasymptotic_point():
    deltas = experiments.default_deltas(8)
    values = [d ** -0.5 for d in deltas]
    values[-1] *= 3.0
    fit = experiments.fit_points(deltas, values)
    assert fit.dropped
    assert fit.n_points == 7
    assert fit.slope == pytest.approx(-0.5, abs=1e-10)


def test_normal_rate_closed_form():
    records = _closed("power:2", "closed_form")
    assert all(r.regime == "normal" for r in records)
    assert experiments.fit_loglog(records).slope == pytest.approx(-0.75, abs=1e-8)


def test_linear_rate_main2():
    records = _closed("linear:1", "main2")
    assert experiments.fit_loglog(records).slope == pytest.approx(-0.5, abs=1e-8)


def test_pure_tangential_is_constant():
    records = _closed("power:2", "closed_form", xn=0.0, xt=1.0)
    assert [r.value for r in records] == pytest.approx([1.0] * len(records))


def test_interpolation_family_f3():
    records = _closed("power:0.75", "f3", gamma=1.0 / 6.0)
    assert experiments.fit_loglog(records).slope == pytest.approx(-1.0 / 6.0, abs=1e-8)


def test_estimator_errors_are_tagged():
    records = _closed("power:2", "f3", deltas=(0.01, 0.02))
    assert all(r.error_tag == "CertificationError" and r.value is None for r in records)
    assert not any(r.valid for r in records)


def test_sweep_config_validation():
    with pytest.raises(DomainError):
        SweepConfig(profile="power:2", deltas=(0.7,))
    with pytest.raises(ValueError):
        SweepConfig(profile="power:2", estimators=("guess",))
    with pytest.raises(ValueError):
        SweepConfig(profile="power:0")


def test_csv_layout(tmp_path):
    records = _closed("power:2", "closed_form", deltas=(0.01, 0.1))
    out = experiments.write_csv(records, tmp_path / "nested" / "sweep.csv")
    raw = out.read_bytes()
    assert b"\r\n" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == ",".join(experiments.CSV_HEADER)
    assert len(lines) == 3
    fields = lines[1].split(",")
    assert fields[2] == f"{0.01:.17g}"
    assert fields[-1] == "0"
    back = experiments.read_csv(out)
    assert [r.value for r in back] == [r.value for r in records]


def test_read_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(RuntimeError):
        experiments.read_csv(path)


def test_sweep_is_deterministic():
    config = SweepConfig(profile="power:2", deltas=(0.01, 0.05), estimators=("closed_form", "schwarz", "sibony"), workers=1)
    assert experiments.render_csv(experiments.sweep(config)) == experiments.render_csv(experiments.sweep(config))


def test_process_pool_matches_inline():
    base = dict(profile="power:2", deltas=(0.01, 0.02, 0.05), estimators=("closed_form", "schwarz"))
    inline = experiments.sweep(SweepConfig(workers=1, **base))
    pooled = experiments.sweep(SweepConfig(workers=2, **base))
    assert experiments.render_csv(inline) == experiments.render_csv(pooled)


def test_timing_column():
    records = _closed("power:2", "schwarz", deltas=(0.01,), timing=True)
    assert records[0].seconds > 0.0


def test_accept_unknown_suite():
    with pytest.raises(ValueError):
        experiments.accept("nonsense")


def test_catalog_suite_passes():
    report = experiments.accept("catalog", quick=True)
    assert report.passed
    assert report.format_table()[0].startswith("criterion")


def test_catalog_suite_catches_broken_disc(monkeypatch):
    def broken(profile, delta, delta0, n, w):
        lam = 0.01
        return discs._Draft((-delta, lam * n), (0j, lam * w, 5.0), 1.0, lam)

    monkeypatch.setitem(discs._BUILDERS, "D6", broken)
    report = experiments.accept("catalog", quick=True)
    assert not report.passed
    failed = [r for r in report.results if not r.passed]
    assert failed[0].name == "admissibility"
    assert "D6" in failed[0].detail


def test_record_valid_flag():
    good = SweepRecord("power:2", 2.0, 0.01, 1.0, 0.0, None, "closed_form", "normal", 3.0)
    bad = SweepRecord("power:2", 2.0, 0.01, 1.0, 0.0, None, "f3", "", None, "RegimeError")
    assert good.valid and not bad.valid
    assert not SweepRecord("power:2", 2.0, 0.01, 1.0, 0.0, None, "x", "", math.inf).valid


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["tangent-exact", "sibony-validity", "normal-rate", "linear-rate", "thin-cusp"])
def test_acceptance_suites(suite):
    assert experiments.accept(suite, seed=42).passed


@pytest.mark.slow
def test_acceptance_quick_all():
    report = experiments.accept("all", seed=42, quick=True)
    assert report.passed, "\n".join(report.format_table())


def test_sweep_config_carries_oracle_settings():
    assert SweepConfig(profile="power:2").oracle_config == OracleConfig()
    custom = OracleConfig(n_restarts=2, budget=500, seed=7)
    assert SweepConfig(profile="power:2", oracle_config=custom).oracle_config is custom
    assert experiments.oracle.kappa2_upper_numeric is not None


@pytest.mark.parametrize("quick, expected", [(False, 16), (True, 5)])
def test_theorem1_suite_covers_the_delta_grid(monkeypatch, quick, expected):
    seen = []

    def upper(domain, delta, x, config):
        seen.append(delta)
        return domain.profile.inverse(delta) / delta

    monkeypatch.setattr(experiments.oracle, "kappa2_upper_numeric", upper)
    report = experiments.accept("theorem1", seed=42, quick=quick)
    assert len(seen) == expected
    assert min(seen) == pytest.approx(1e-4) and max(seen) == pytest.approx(1e-1)
    assert all(r.passed for r in report.results)
