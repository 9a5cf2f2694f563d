from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dissent.model import (
    MetricsReport,
    Provenance,
    SourceProgram,
    SuiteTestCase,
    TaskBundle,
    normalize_output,
)


def test_normalize_collapses_space_runs():
    assert normalize_output("a  b\t\tc") == "a b c"


def test_normalize_strips_trailing_whitespace_per_line():
    assert normalize_output("YES   \nNO\t") == "YES\nNO"


def test_normalize_drops_trailing_blank_lines():
    assert normalize_output("YES\n\n\n") == "YES"
    assert normalize_output("\n\n") == ""


def test_normalize_keeps_interior_blank_lines():
    assert normalize_output("a\n\nb\n") == "a\n\nb"


def test_normalize_whitespace_only_becomes_empty():
    assert normalize_output("   \t  ") == ""


@given(st.text(alphabet="ab \t\n", max_size=40))
def test_normalize_is_idempotent(text):
    once = normalize_output(text)
    assert normalize_output(once) == once


def test_source_program_rejects_empty_source():
    with pytest.raises(ValueError):
        SourceProgram(language_tag="python3", source="")


def test_task_bundle_requires_nonempty_suite():
    put = SourceProgram(language_tag="python3", source="print(1)\n")
    with pytest.raises(ValueError):
        TaskBundle(task_id="t", specification="spec", put=put, suite=())


def test_provenance_variants_validate_fields():
    gen = Provenance.generator(script_ref="abc", seed=3)
    assert gen.kind == "generator" and gen.seed == 3
    direct = Provenance.direct_llm(transcript_ref="key")
    assert direct.kind == "direct_llm"
    with pytest.raises(ValueError):
        Provenance(kind="generator", script_ref=None, seed=None)
    with pytest.raises(ValueError):
        Provenance(kind="elsewhere")


def test_metrics_from_counts_basic():
    m = MetricsReport.from_counts(tp=3, fp=1, fn_=0, tn=0)
    assert m.precision == pytest.approx(0.75, abs=1e-12)
    assert m.recall == pytest.approx(1.0, abs=1e-12)
    assert m.f1 == pytest.approx(6.0 / 7.0, abs=1e-12)


def test_metrics_zero_denominators_are_zero():
    m = MetricsReport.from_counts(tp=0, fp=0, fn_=0, tn=5)
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)


def test_metrics_rejects_negative_counts():
    with pytest.raises(ValueError):
        MetricsReport.from_counts(tp=-1, fp=0, fn_=0, tn=0)


@given(
    tp=st.integers(0, 40),
    fp=st.integers(0, 40),
    fn_=st.integers(0, 40),
    tn=st.integers(0, 40),
)
def test_metrics_ratios_stay_in_unit_interval(tp, fp, fn_, tn):
    m = MetricsReport.from_counts(tp=tp, fp=fp, fn_=fn_, tn=tn)
    for value in (m.precision, m.recall, m.f1):
        assert 0.0 <= value <= 1.0


def test_suite_test_case_is_value_like():
    a = SuiteTestCase(input="1\n", expected_output="2\n")
    b = SuiteTestCase(input="1\n", expected_output="2\n")
    assert a == b
