import numpy as np
import pytest

from spacetime_wf.grids import GridField1D
from spacetime_wf.quantization.decay import DegenerateDecayError, decay_order, decay_report
from spacetime_wf.quantization.partition import build_partition
from spacetime_wf.quantization.symbols import (bump_symbol, constant_symbol, egorov_conjugate, random_product_symbol,
                                               x_only_symbol, xi_only_symbol)
from spacetime_wf.quantization.weyl import MarginError, weyl_apply, weyl_apply_dense
from spacetime_wf.smooth import bump1d, chi

L, N = 8.0, 256


def _packet():
    return GridField1D.from_function(lambda x: np.exp(-(x - 0.5) ** 2) * (1 + 0.3j * x), L, N)


def test_chi_is_smooth_step():
    assert chi(np.array([0.0, 1.0]))[0] == 1.0 and chi(np.array([1.0]))[0] == 1.0
    assert chi(np.array([2.0, 3.0])).max() == 0.0
    assert np.all(np.diff(chi(np.linspace(1, 2, 50))) <= 0)


def test_bump_support_is_exact():
    z = np.linspace(-3, 3, 601)
    v = bump1d(z, 0.5, 1.0)
    assert np.all(v[np.abs(z - 0.5) >= 1.0] == 0)
    assert v.max() == 1.0


def test_identity_symbol_quantizes_to_identity():
    u = _packet()
    assert np.abs(weyl_apply(constant_symbol(2), "spatial:(x,hp)", u, 0.3).values - u.values).max() < 1e-12


def test_x_only_symbol_is_multiplication():
    u = _packet()
    g = lambda x: np.cos(x) * np.exp(-x ** 2)
    out = weyl_apply(x_only_symbol(g, [-3, 3]), "spatial:(x,hp)", u, 0.3).values
    assert np.abs(out - g(u.x) * u.values).max() < 1e-12


def test_xi_only_symbol_is_fourier_multiplier():
    u = _packet()
    g = lambda z: np.exp(-z ** 2)
    h = 0.5
    out = weyl_apply(xi_only_symbol(g, [-4, 4]), "spatial:(x,hp)", u, h).values
    ref = np.fft.ifft(g(h * u.xi) * np.fft.fft(u.values))
    assert np.abs(out - ref).max() < 1e-12


@pytest.mark.parametrize("mode,h", [("spatial:(hx,hp)", 0.5), ("spatial:(x,hp)", 0.25)])
def test_fast_general_and_dense_routes_agree(mode, h):
    rng = np.random.default_rng(0)
    u = _packet()
    a = random_product_symbol(rng, 2, [(-1, 1), (-2, 2)])
    d = weyl_apply_dense(a, mode, u, h).values
    for force in (False, True):
        f = weyl_apply(a, mode, u, h, force_general=force).values
        assert np.linalg.norm(f - d) / np.linalg.norm(d) < 1e-10


def test_margin_violation_raises():
    with pytest.raises(MarginError):
        weyl_apply(bump_symbol([7.9, 0.0], 0.5), "spatial:(x,hp)", _packet(), 0.5)


def test_egorov_conjugate_shears_support():
    a = bump_symbol([0.0, 1.0], 0.5)
    b = egorov_conjugate(a, 2.0)
    assert np.isclose(b(np.array([-2.0]), np.array([1.0]))[0], a(np.array([0.0]), np.array([1.0]))[0])


def test_decay_order_recovers_power_law():
    h = 2.0 ** -np.arange(2, 8)
    rep = decay_order(list(zip(h, 3 * h ** 2.5)))
    assert np.isclose(rep.slope, 2.5)
    assert rep.verdict != "rapid-decay"


def test_decay_report_floor_fallback_is_lower_bound():
    h = 2.0 ** -np.arange(2, 8)
    norms = [1.0, 1e-6, 1e-16, 1e-17, 1e-18, 1e-19]
    with pytest.raises(DegenerateDecayError):
        decay_order(list(zip(h, norms)))
    rep = decay_report(h, norms)
    assert rep.bound and rep.rapid


def test_partition_sums_to_one():
    p = build_partition(0.5)
    mu = np.linspace(-3, 3, 101)
    nu = np.geomspace(0.1, 50, 101)
    assert np.abs(p.sum_at(mu, nu) - 1).max() < 1e-12
