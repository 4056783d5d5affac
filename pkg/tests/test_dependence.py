import numpy as np
import pytest

from condsub.data import from_arrays
from condsub.dependence import dependence_report
from condsub.errors import DataError
from condsub.simulation import ScenarioSpec, generate


def test_deterministic_function_near_one():
    rng = np.random.default_rng(0)
    n = 600
    weekday = rng.choice(["mon", "tue", "wed", "sat", "sun"], n)
    holiday = rng.choice(["yes", "no"], n, p=[0.1, 0.9])
    work = np.where((holiday == "no") & ~np.isin(weekday, ["sat", "sun"]),
                    "yes", "no")
    d = from_arrays(["weekday", "holiday", "work"], [weekday, holiday, work])
    report = dependence_report(d, seed=1)
    scores = {f.feature: f.explained_fraction for f in report.per_feature}
    assert scores["work"] > 0.9


def test_independent_feature_near_zero():
    rng = np.random.default_rng(2)
    n = 1000
    d = from_arrays(["a", "b", "c"],
                    [rng.standard_normal(n), rng.standard_normal(n),
                     rng.standard_normal(n)])
    report = dependence_report(d, seed=3)
    for f in report.per_feature:
        assert f.explained_fraction < 0.10


def test_linear_scenario_half_explained():
    d = generate(ScenarioSpec("linear", n=2000, seed=4)).drop_target()
    report = dependence_report(d, seed=5)
    scores = {f.feature: f.explained_fraction for f in report.per_feature}
    assert abs(scores["x1"] - 0.5) < 0.1


def test_duplicated_column_highly_explained():
    rng = np.random.default_rng(6)
    n = 500
    x = rng.standard_normal(n)
    d = from_arrays(["a", "a_copy", "b"], [x, x.copy(), rng.standard_normal(n)])
    report = dependence_report(d, seed=7)
    scores = {f.feature: f.explained_fraction for f in report.per_feature}
    assert scores["a"] >= 0.95
    assert scores["a_copy"] >= 0.95


def test_column_order_invariance():
    rng = np.random.default_rng(8)
    n = 400
    x = rng.standard_normal(n)
    cols = {"a": x, "b": x + 0.5 * rng.standard_normal(n),
            "c": rng.standard_normal(n)}
    d1 = from_arrays(["a", "b", "c"], [cols["a"], cols["b"], cols["c"]])
    d2 = from_arrays(["c", "a", "b"], [cols["c"], cols["a"], cols["b"]])
    r1 = {f.feature: f.explained_fraction for f in dependence_report(d1, seed=9).per_feature}
    r2 = {f.feature: f.explained_fraction for f in dependence_report(d2, seed=9).per_feature}
    for name in ("a", "b", "c"):
        assert abs(r1[name] - r2[name]) < 0.1


def test_preconditions():
    rng = np.random.default_rng(10)
    with pytest.raises(DataError):
        dependence_report(from_arrays(["a"], [rng.standard_normal(100)]), seed=0)
    with pytest.raises(DataError):
        dependence_report(from_arrays(["a", "b"],
                                      [rng.standard_normal(30),
                                       rng.standard_normal(30)]), seed=0)
    with pytest.raises(DataError, match="constant"):
        dependence_report(from_arrays(["a", "b"],
                                      [np.zeros(100),
                                       rng.standard_normal(100)]), seed=0)


def test_report_serialization():
    rng = np.random.default_rng(11)
    n = 200
    d = from_arrays(["a", "b"], [rng.standard_normal(n), rng.standard_normal(n)])
    report = dependence_report(d, seed=12)
    csv_text = report.to_csv()
    lines = csv_text.strip().splitlines()
    assert lines[0] == "feature,type,explained_fraction"
    assert len(lines) == 3
    text = report.to_text()
    assert "a" in text and "b" in text
