import numpy as np

from spacetime_wf.classical import (ExtendedPhasePoint, classify_nontrapping, frozen_energy, hamilton_flow,
                                    richardson, scattering_data, technical_flow, technical_flow_via_reduced)
from spacetime_wf.coefficients import build_field


def test_free_flow_is_straight_line():
    tr = hamilton_flow(build_field("identity"), -1.0, 0.5, 1.5, 2.0)
    assert np.isclose(tr.x[-1, 0], 0.5 + 3.0 * 1.5)  # elapsed time t_end - s = 3
    assert np.isclose(tr.xi[-1, 0], 1.5)


def test_frozen_energy_conserved_along_bump_flow():
    f = build_field("bump-metric(0.1)")
    tr = hamilton_flow(f, -1.0, -5.0, 1.0, 20.0, tol=1e-12)
    E = frozen_energy(f, -1.0, tr.x, tr.xi)
    assert np.ptp(E) < 1e-9


def test_scattering_spec_example_identity():
    sd = scattering_data(build_field("identity"), -1, 2, 1.5, +1)
    assert np.isclose(sd.x[0], 2.0) and np.isclose(sd.xi[0], 1.5)
    assert sd.verdict == "non-trapped"


def test_scattering_momentum_magnitude_conserved_for_bump():
    sd = scattering_data(build_field("bump-metric(0.1)"), -1, -0.2, 1.5, +1)
    # far from the bump the metric is the identity, so |xi_+| equals the initial frozen speed
    f = build_field("bump-metric(0.1)")
    speed = np.sqrt(f.a(np.array([-1.0]), np.array([-0.2]))[0]) * 1.5
    assert np.isclose(abs(sd.xi[0]), speed, rtol=1e-8)


def test_nontrapping_classifier():
    assert classify_nontrapping(build_field("bump-metric(0.1)"), -1, -5, 1) == "both"  # escapes in both time directions


def test_technical_flow_two_routes_agree():
    f = build_field("bump-metric(0.1)")
    p = ExtendedPhasePoint(-1.0, -5.0, 0.3, 1.0)
    for kappa in (0.4, 1.0):
        a = technical_flow(f, 0.1, kappa, p)
        b = technical_flow_via_reduced(f, 0.1, kappa, p)
        assert a.distance(b) < 1e-8


def test_richardson_removes_linear_term():
    h = 2.0 ** -np.arange(3, 8)
    vals = (3.0 + 2.0 * h)[:, None]
    assert np.allclose(richardson(h, vals, 1), 3.0)
