import numpy as np

from spacetime_wf.coefficients import build_field
from spacetime_wf.estimators import HWFDetector, ScatteringMap
from spacetime_wf.initial_data import delta_surrogate
from spacetime_wf.wavefront import dyadic


def test_params_roundtrip():
    d = HWFDetector(radius=0.4)
    assert d.get_params()["radius"] == 0.4
    d.set_params(radius=0.3)
    assert d.radius == 0.3 and "radius=0.3" in repr(d)


def test_detector_predict():
    d = HWFDetector(h_values=dyadic(0, 5)).fit(delta_surrogate(40.0, 4096))
    assert d.predict([[0.0, 2.0]]).tolist() == [True]


def test_scattering_map_identity():
    out = ScatteringMap(build_field("identity")).fit().transform([[-1, 2, 1.5]])
    assert np.allclose(out, [[2, 1.5]])
