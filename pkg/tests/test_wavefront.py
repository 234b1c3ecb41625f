import numpy as np
import pytest

from spacetime_wf.coefficients import build_field
from spacetime_wf.initial_data import delta_surrogate, gaussian
from spacetime_wf.wavefront import (HWFSet, SignConstraintError, WFQuery, dyadic, predict_points,
                                    verify_correspondence)
from spacetime_wf.wavefront import test_hwf as hwf_test


def test_predict_free_to_initial():
    (p,) = predict_points(None, [(0.5, 0.3, 1.0)], "free-initial")
    assert p.point == (-0.5, 1.0)


def test_predict_perturbed_to_free_identity():
    (p,) = predict_points(build_field("identity"), [(-1, 2, 1.5)], "perturbed-free")
    assert np.allclose(p.point, (-1, 2, -1.125, 1.5))


def test_predict_corollary_identity():
    (p,) = predict_points(build_field("identity"), [(-1, 0.0, 1.5)], "corollary", r=1.0)
    assert np.allclose(p.point, (3.0, 1.5))


def test_sign_constraints():
    with pytest.raises(SignConstraintError):
        predict_points(build_field("identity"), [(0.0, 0.0, 1.0)], "perturbed-free")
    with pytest.raises(SignConstraintError):
        predict_points(build_field("identity"), [(-1.0, 0.0, 1.0)], "corollary", r=-2.0)


def test_hwf_set_line():
    line = HWFSet("line", 1.0)
    assert line.contains(1.0, 1.0) and not line.contains(0.5, 1.0)
    assert not HWFSet("empty").contains(0.0, 1.0)


def test_query_validation():
    with pytest.raises(ValueError):
        WFQuery((0.0, 0.0))
    with pytest.raises(ValueError):
        WFQuery((0.0, 1.0), h_values=(0.5, 0.25))


def test_hwf_detector_separates_delta_from_gaussian():
    q = WFQuery((0.0, 2.0), h_values=dyadic(0, 5))
    smooth = hwf_test(gaussian(40.0, 4096), q)
    sharp = hwf_test(delta_surrogate(40.0, 4096), q)
    assert smooth.rapid and not sharp.rapid


def test_verify_records_errors_per_point():
    phi = gaussian(40.0, 4096)
    from spacetime_wf.propagators import assemble_spacetime
    u = assemble_spacetime("free", phi, (-1.0, 1.0), 32)
    rep = verify_correspondence(phi, [(0.5, 0.0, 0.0)], "free-initial", u=u, hwf_set=HWFSet("empty"))
    assert rep.records[0].error is not None and rep.summary()["errors"] == 1


@pytest.mark.parametrize("point", [(0.0, 1.0), (0.0, 2.0), (0.0, -1.5)])
def test_radius_shrink_keeps_singular_slope(point):
    # the surrogate (width 4 cells at dx = 1/128) stays unresolved over the whole h range
    phi = delta_surrogate(64.0, 16384)
    slopes = [hwf_test(phi, WFQuery(point, radius=r, h_values=dyadic(0, 5))).slope for r in (0.5, 0.25)]
    assert slopes[1] >= slopes[0] - 0.3


@pytest.mark.slow
def test_radius_shrink_keeps_rapid_decay():
    # asymptotic range: the position factor's spectral width h / (0.08 r) stays far below eta / h
    phi = gaussian(256.0, 131072)
    reps = [hwf_test(phi, WFQuery((0.0, 2.0), radius=r, h_values=dyadic(3, 8))) for r in (0.5, 0.25)]
    assert reps[0].rapid and reps[1].rapid
