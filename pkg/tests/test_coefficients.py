import numpy as np
import pytest

from spacetime_wf.coefficients import FieldSpecError, build_field


def test_identity_field_is_free():
    f = build_field("identity")
    assert f.is_free
    x = np.linspace(-3, 3, 7)
    assert np.allclose(f.a(np.zeros_like(x), x), 1.0)
    assert np.allclose(f.V(np.zeros_like(x), x), 0.0)


def test_bump_metric_reduces_to_identity_far_away():
    f = build_field("bump-metric(0.1)")
    x = np.array([-50.0, 50.0])
    assert np.allclose(f.a(np.zeros(2), x), 1.0, atol=1e-12)
    assert f.a(np.zeros(1), np.zeros(1))[0] != 1.0


def test_bump_metric_derivative_matches_finite_difference():
    f = build_field("bump-metric(0.1)")
    x = np.linspace(-1.5, 1.5, 11)
    t = np.full_like(x, 0.2)
    step = 1e-6
    fd = (f.a(t, x + step) - f.a(t, x - step)) / (2 * step)
    assert np.allclose(f.da_dx(t, x), fd, atol=1e-8)


def test_unknown_tag_raises():
    with pytest.raises(FieldSpecError):
        build_field("no-such-field")


def test_describe_roundtrips_tag():
    d = build_field("bump-metric(0.1)").describe()
    assert d["tag"] == "bump-metric"
