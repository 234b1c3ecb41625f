import numpy as np
import pytest

from spacetime_wf.coefficients import build_field
from spacetime_wf.grids import GridField1D
from spacetime_wf.initial_data import gaussian, windowed_chirp
from spacetime_wf.propagators import (BandLimitError, DiscreteHamiltonian, assemble_spacetime, check_bandlimit, decimate,
                                      free_propagate, free_propagate_many, perturbed_propagate)


def test_free_gaussian_closed_form():
    phi = gaussian(20.0, 1024)
    x = phi.x
    for t in (0.5, 1.0, 2.0):
        exact = (1 + 1j * t) ** -0.5 * np.exp(-x ** 2 / (2 * (1 + 1j * t)))
        assert np.abs(free_propagate(phi, t).values - exact).max() < 1e-12


def test_free_propagate_many_matches_single_slices():
    phi = gaussian(20.0, 256, momentum=1.0)
    times = np.array([-0.5, 0.0, 0.7])
    many = free_propagate_many(phi, times)
    for row, t in zip(many, times):
        assert np.allclose(row, free_propagate(phi, t).values)


def test_bandlimit_check():
    x = -10 + 20 / 256 * np.arange(256)
    noisy = GridField1D(10.0, 256, np.where(np.arange(256) % 2, 1.0, -1.0) + 0j * x)
    with pytest.raises(BandLimitError):
        free_propagate(noisy, 0.1)


def test_spectral_hamiltonian_is_hermitian():
    H = DiscreteHamiltonian(build_field("bump-metric(0.1)"), 20.0, 128)
    assert H.hermitian_defect(0.3) < 1e-13
    assert DiscreteHamiltonian(build_field("bump-metric(0.1)"), 20.0, 128, "fd").hermitian_defect(0.3) < 1e-13


def test_identity_field_crank_nicolson_matches_free():
    phi = gaussian(20.0, 1024)
    u = perturbed_propagate(build_field("identity"), phi, 1.0, 1e-3)
    assert np.linalg.norm(u.values - free_propagate(phi, 1.0).values) / np.linalg.norm(phi.values) < 1e-6


def test_decimate_preserves_band_limited_samples():
    phi = gaussian(20.0, 1024, momentum=1.0)
    coarse = gaussian(20.0, 256, momentum=1.0)
    assert np.abs(decimate(phi.values, 256) - coarse.values).max() < 1e-12


def test_assemble_perturbed_reads_initial_slice():
    phi = gaussian(20.0, 256)
    u = assemble_spacetime("perturbed", phi, (-0.15, 0.15), 16, field=build_field("bump-metric(0.1)"), dt=0.01)
    k = int(np.argmin(np.abs(u.times)))
    ref = perturbed_propagate(build_field("bump-metric(0.1)"), phi, u.times[k], 0.01)
    assert np.allclose(u.slice(k).values, ref.values, atol=1e-12)


def test_default_chirp_is_band_limited():
    # local frequency beta x must stay under 80% of Nyquist on the [-L, L] grid
    check_bandlimit(windowed_chirp(192.0, 16384))
