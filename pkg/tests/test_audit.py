"""Tests for the sampled hypothesis audit."""

import dataclasses

import numpy as np
import pytest

from src.core.audit import AuditGrid, Verdict, audit_conditions
from src.core.exceptions import ParameterError
from src.core.nonlinearity import Nonlinearity, ZeroNonlinearity

SMALL = AuditGrid(points=11, random_points=200)

CONDITIONS = ["origin", "H1", "H2'", "F0", "F1", "F1'", "f1", "F2", "C1", "C2", "C3", "C4"]


class _Shifted(Nonlinearity):
    """base F plus slope * s + offset."""

    def __init__(self, base, slope=1.0, offset=0.0):
        super().__init__(base.graph, f"{base.name}+shift")
        self.base, self.slope, self.offset = base, slope, offset

    def _evaluate(self, idx, s, t):
        F, Fs, Ft = self.base.evaluate(idx, s, t)
        return F + self.slope * s + self.offset, Fs + self.slope, Ft


def test_every_condition_is_reported_in_order(example51):
    report = audit_conditions(example51, grid=SMALL)
    assert [r.condition for r in report.results] == CONDITIONS


def test_example51_sublinear_conditions_hold(example51):
    report = audit_conditions(example51, grid=SMALL)
    assert report["origin"].verdict is Verdict.HOLDS
    assert report["H1"].verdict is Verdict.HOLDS
    assert report["F1"].verdict is Verdict.HOLDS
    assert report["F2"].verdict is Verdict.HOLDS
    assert report["f1"].verdict is Verdict.NOT_APPLICABLE
    for name in ("C1", "C2", "C3", "C4"):
        assert report[name].verdict is Verdict.NOT_APPLICABLE
    assert report.violated == []


def test_example52_superlinear_conditions_hold(example52):
    report = audit_conditions(example52, grid=SMALL)
    for name in ("origin", "H1", "C1", "C2", "C3", "C4"):
        assert report[name].verdict is Verdict.HOLDS, name
    assert report["F1"].verdict is Verdict.NOT_APPLICABLE


def test_flat_nonlinearity_violates_superlinear_growth(example52):
    flat = example52.with_nonlinearity(ZeroNonlinearity(example52.graph))
    result = audit_conditions(flat, grid=SMALL)["C2"]
    assert result.verdict is Verdict.VIOLATED
    assert result.witness is not None
    assert result.witness.vertex == "c"
    assert result.witness.lhs > result.witness.rhs


def test_norm_condition_failure_has_no_witness(example51):
    n = example51.graph.n
    hp = dataclasses.replace(example51.hypothesis, f1=np.full(n, 2.0))
    result = audit_conditions(example51, hp=hp, grid=SMALL)["F1"]
    assert result.verdict is Verdict.VIOLATED
    assert result.witness is None
    assert any("norm condition" in note for note in result.notes)


def test_sublevel_measures_are_reported(example51):
    hp = dataclasses.replace(example51.hypothesis, sublevels=(3.0, 5.0))
    report = audit_conditions(example51, hp=hp, grid=SMALL)
    assert report["H2'"].verdict is Verdict.HOLDS
    # h1 = 3 + dist(x, v0) on a path of nine unit-measure vertices
    assert report.sublevel_measures[3.0] == (1.0, 1.0)
    assert report.sublevel_measures[5.0] == (3.0, 3.0)


def test_growth_table_condition(example51):
    n = example51.graph.n
    hp = dataclasses.replace(example51.hypothesis, a_table=((1.0, 1.0), (20.0, 100.0)), b=np.ones(n))
    assert audit_conditions(example51, hp=hp, grid=SMALL)["F0"].verdict is Verdict.HOLDS
    tight = dataclasses.replace(hp, a_table=((20.0, 0.1),))
    assert audit_conditions(example51, hp=tight, grid=SMALL)["F0"].verdict is Verdict.VIOLATED


def test_report_is_deterministic_and_serialisable(example52):
    first = audit_conditions(example52, grid=SMALL).to_dict()
    second = audit_conditions(example52, grid=SMALL).to_dict()
    assert first == second
    assert first["results"][0]["verdict"] == "holds"


def test_grid_validation_and_open_disc():
    with pytest.raises(ParameterError):
        AuditGrid(span=0.0)
    with pytest.raises(ParameterError):
        AuditGrid(points=1)
    idx, s, t = AuditGrid(points=5, random_points=10).plane(3, radius=1.0)
    assert np.all(np.hypot(s, t) < 1.0)
    assert set(np.unique(idx)) <= {0, 1, 2}
    _, values = AuditGrid(points=5, random_points=10).line(2, 0.0, 1.0)
    assert np.all((values > 0.0) & (values < 1.0))


def test_linear_term_in_F_is_detected(example52):
    seeded = dataclasses.replace(example52, nonlinearity=_Shifted(example52.nonlinearity))
    report = audit_conditions(seeded, grid=SMALL)
    # F + s still vanishes at (x, 0, 0); its F_s does not, which breaks the small-amplitude bound
    assert report["origin"].verdict is Verdict.HOLDS
    assert report["C1"].verdict is Verdict.VIOLATED
    assert abs(report["C1"].witness.lhs) >= 1.0 - 1e-12
    assert "C1" in report.violated


def test_nonzero_F_at_origin_is_detected(example52):
    seeded = dataclasses.replace(
        example52, nonlinearity=_Shifted(example52.nonlinearity, offset=0.5), strict=False
    )
    report = audit_conditions(seeded, grid=SMALL)
    result = report["origin"]
    assert result.verdict is Verdict.VIOLATED
    assert result.witness.vertex == "c"
    assert result.witness.lhs == pytest.approx(0.5)
    assert report.violated[0] == "origin"
