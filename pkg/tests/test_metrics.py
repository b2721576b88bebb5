import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ovrlogit.errors import DimensionMismatchError
from ovrlogit.metrics import (
    ConfusionMatrix2,
    MetricsBundle,
    confusion,
    macro_average,
    metrics_from_confusion,
    normal_quantile,
    wilson_interval,
)


def _erf_quantile(p):
    # bisection on the erf-based normal CDF
    lo, hi = -10.0, 10.0
    for _ in range(200):
        mid = (lo + hi) / 2
        if 0.5 * (1 + math.erf(mid / math.sqrt(2))) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _wilson_by_roots(k, n, conf):
    # endpoints solve (p - phat)^2 = z^2 p (1 - p) / n
    z = _erf_quantile(0.5 + conf / 2)
    phat = k / n
    a = 1 + z * z / n
    b = -(2 * phat + z * z / n)
    c = phat * phat
    disc = math.sqrt(max(b * b - 4 * a * c, 0.0))
    return (-b - disc) / (2 * a), (-b + disc) / (2 * a)


def test_confusion_counts():
    c = confusion([1, 1, 0, 0, 1, 0], [1, 0, 0, 1, 1, 0])
    assert (c.tp, c.tn, c.fp, c.fn) == (2, 2, 1, 1)
    assert c.total == 6


def test_confusion_all_correct():
    c = confusion([0, 1, 1], [0, 1, 1])
    assert (c.tp, c.tn, c.fp, c.fn) == (2, 1, 0, 0)


def test_confusion_validation():
    with pytest.raises(DimensionMismatchError):
        confusion([0, 1], [0])
    with pytest.raises(ValueError):
        confusion([], [])
    with pytest.raises(ValueError):
        confusion([0, 2], [0, 1])
    with pytest.raises(ValueError):
        ConfusionMatrix2(-1, 0, 0, 0)


def test_metrics_known_case():
    b = metrics_from_confusion(ConfusionMatrix2(tp=12, tn=23, fp=1, fn=0))
    assert b.accuracy == pytest.approx(35 / 36)
    assert b.precision == pytest.approx(12 / 13)
    assert b.recall == 1.0
    assert b.f1 == pytest.approx(2 * (12 / 13) / (12 / 13 + 1))


def test_metrics_undefined_precision():
    b = metrics_from_confusion(ConfusionMatrix2(tp=0, tn=5, fp=0, fn=2))
    assert b.precision is None and b.f1 is None
    assert b.recall == 0.0
    assert b.undefined() == ["precision", "f1"]


def test_macro_average():
    m = macro_average([MetricsBundle(1.0, 1.0, 1.0, 1.0), MetricsBundle(0.5, 0.25, 0.5, 0.4)])
    assert m == MetricsBundle(0.75, 0.625, 0.75, 0.7)
    vals = [1.0, 35 / 36, 34 / 36]
    avg = macro_average([MetricsBundle(v, v, v, v) for v in vals])
    assert round(avg.accuracy, 4) == 0.9722


def test_macro_skips_undefined():
    with pytest.warns(RuntimeWarning, match="undefined and excluded"):
        m = macro_average([MetricsBundle(1.0, None, 0.0, None), MetricsBundle(0.5, 0.5, 0.5, 0.5)])
    assert m.precision == 0.5 and m.recall == 0.25
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert macro_average([MetricsBundle(1.0, None, None, None)]).f1 is None
    with pytest.raises(ValueError):
        macro_average([])


@pytest.mark.parametrize("p", [0.5, 0.8, 0.975, 0.995, 0.025, 1e-6])
def test_normal_quantile(p):
    assert normal_quantile(p) == pytest.approx(_erf_quantile(p), abs=1e-9)


def test_wilson_reference_values():
    lo, hi = wilson_interval(35, 36)
    assert abs(lo - 0.855) < 0.02 and abs(hi - 0.999) < 0.02
    assert wilson_interval(0, 10)[0] == 0.0
    lo, hi = wilson_interval(5, 10)
    assert lo < 0.5 < hi
    assert lo + hi == pytest.approx(1.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 500).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))),
       st.sampled_from([0.8, 0.9, 0.95, 0.99]))
def test_wilson_matches_quadratic_roots(kn, conf):
    k, n = kn
    lo, hi = wilson_interval(k, n, conf)
    rlo, rhi = _wilson_by_roots(k, n, conf)
    assert lo == pytest.approx(max(rlo, 0.0), abs=1e-9)
    assert hi == pytest.approx(min(rhi, 1.0), abs=1e-9)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_wilson_validation():
    for args in [(1, 0), (-1, 5), (6, 5)]:
        with pytest.raises(ValueError):
            wilson_interval(*args)
    with pytest.raises(ValueError):
        wilson_interval(1, 2, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_confusion_properties(pairs):
    t, p = (np.array(v) for v in zip(*pairs))
    c = confusion(t, p)
    assert c.total == len(pairs)
    assert c.tp + c.fn == int(t.sum())
    b = metrics_from_confusion(c)
    assert b.accuracy == pytest.approx(float(np.mean(t == p)))
    if b.f1 is not None:
        assert min(b.precision, b.recall) - 1e-12 <= b.f1 <= max(b.precision, b.recall) + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_accuracy_complement(pairs):
    t, p = (np.array(v) for v in zip(*pairs))
    a = metrics_from_confusion(confusion(t, p)).accuracy
    b = metrics_from_confusion(confusion(t, 1 - p)).accuracy
    # counts are integers, so compare the numerators exactly
    assert round(a * len(t)) + round(b * len(t)) == len(t)
    assert a == pytest.approx(1.0 - b, abs=1e-15)
