import math

import numpy as np
import pytest

from nesskit.device import DeviceProfile
from nesskit.scattering import (
    DeltaCouplings,
    eigenfunctions,
    interior_transfer,
    scattering_matrix,
    transmission,
)

from conftest import random_device
from oracles import square_barrier_transfer, square_barrier_transmission

FLAT = DeviceProfile(a=0.0, b=1.0)
BARRIER = DeviceProfile(a=0.0, b=1.0, breakpoints=(0.0, 1.0), masses=(1.0,), potentials=(5.0,))


def test_flat_transfer_closed_form():
    lam = 2.0
    k = math.sqrt(2.0 * lam)
    t = interior_transfer(FLAT, lam).mat
    assert t[0, 0] == pytest.approx(math.cos(k))
    assert np.trace(t) == pytest.approx(2.0 * math.cos(k))
    assert t[0, 0] * t[1, 1] - t[0, 1] * t[1, 0] == pytest.approx(1.0, abs=1e-12)


def test_transfer_det_one_random(rng):
    # evaluating det from cosh-sized entries cancels at eps * cosh^2, so
    # the 1e-12 contract is checked where kappa * width stays <= ~4
    for _ in range(200):
        dev = random_device(rng, v_int_range=(-2.0, 2.0), width_range=(0.3, 1.2))
        lam = rng.uniform(dev.v_b - 0.5, dev.v_a + 10.0)
        g = DeltaCouplings(rng.uniform(0, 5), rng.uniform(0, 5))
        tm = interior_transfer(dev, lam, g)
        assert tm.det() == pytest.approx(1.0, abs=1e-12)


def test_square_barrier_transfer_matches_oracle():
    for lam in (0.5, 2.0, 4.9):
        t = interior_transfer(BARRIER, lam).mat
        ref = square_barrier_transfer(lam, 5.0, 1.0)
        assert np.allclose(t, ref, rtol=1e-14, atol=1e-14)


def test_flat_device_no_scattering():
    for lam in (0.3, 1.7, 9.2):
        sol = scattering_matrix(FLAT, lam)
        k = math.sqrt(2.0 * lam)
        assert abs(sol.S_aa) < 1e-14
        assert abs(sol.S_ba) == pytest.approx(1.0, abs=1e-14)
        # reference-point phase across the interior of length 1
        assert sol.S_ba == pytest.approx(np.exp(1j * k), abs=1e-12)


def test_square_barrier_transmission_oracle():
    # includes lam = 5.0, the linear-limit branch inside the barrier
    for lam in np.linspace(0.1, 20.0, 200):
        t = transmission(BARRIER, lam)
        ref = square_barrier_transmission(lam, 5.0, 1.0)
        assert t == pytest.approx(ref, rel=1e-10)


def test_one_channel_total_reflection(rng):
    for _ in range(50):
        dev = random_device(rng)
        if dev.v_a <= dev.v_b:
            continue
        lam = rng.uniform(dev.v_b, dev.v_a)
        sol = scattering_matrix(dev, lam)
        assert not sol.two_channel
        assert sol.S_aa is None and sol.S_ab is None and sol.S_ba is None
        assert abs(sol.S_bb) == pytest.approx(1.0, abs=1e-12)


def test_flux_unitarity_and_reciprocity(rng):
    for _ in range(200):
        dev = random_device(rng, v_int_range=(-3.0, 3.0))
        lam = dev.v_a + rng.uniform(1e-4, 12.0)
        sol = scattering_matrix(dev, lam)
        r = sol.q_b / sol.q_a
        assert abs(sol.S_aa) ** 2 + r * abs(sol.S_ba) ** 2 == pytest.approx(1.0, abs=1e-10)
        assert abs(sol.S_bb) ** 2 + abs(sol.S_ab) ** 2 / r == pytest.approx(1.0, abs=1e-10)
        assert r * abs(sol.S_ba) ** 2 == pytest.approx(abs(sol.S_ab) ** 2 / r, abs=1e-10)
        assert abs(sol.S_aa) ** 2 + sol.transmission() == pytest.approx(1.0, abs=1e-10)


def test_below_band_rejected():
    with pytest.raises(ValueError, match="below v_b"):
        scattering_matrix(FLAT, -0.5)


def test_wronskian_constant_across_interior(rng):
    # W(phi_a, phi_b) = u_a w_b - w_a u_b is x-independent for matched solutions
    for _ in range(20):
        dev = random_device(rng)
        lam = dev.v_a + rng.uniform(0.1, 8.0)
        x = np.linspace(dev.a + 1e-3, dev.b - 1e-3, 20)
        sol = eigenfunctions(dev, lam, grid=x)
        w = sol.phi_a * sol.dphi_b - sol.dphi_a * sol.phi_b
        spread = np.max(np.abs(w - w[0])) / np.max(np.abs(w))
        assert spread < 1e-10


def test_flat_transmitted_amplitude():
    lam = 3.0
    q = math.sqrt(lam / 2.0)
    x = np.linspace(1.0, 8.0, 50)
    sol = eigenfunctions(FLAT, lam, grid=x)
    assert np.allclose(np.abs(sol.phi_a), 1.0 / math.sqrt(4.0 * math.pi * q), rtol=1e-12)


def test_decoupled_limit_recovers_dirichlet_and_lead_mode():
    # huge delta strengths force phi(a), phi(b) -> 0 and the right-lead
    # eigenfunction toward the uncoupled sine mode sin(k_b (x-b))/sqrt(pi q_b)
    dev = DeviceProfile(a=0.0, b=1.0, breakpoints=(0.0, 1.0), masses=(1.0,), potentials=(1.0,))
    lam = 2.5
    g = DeltaCouplings(1.0e6, 1.0e6)
    x = np.linspace(-6.0, 8.0, 701)
    sol = eigenfunctions(dev, lam, g, grid=x)
    scale = 1.0 / math.sqrt(4.0 * math.pi * sol.q_b)
    at_a = np.abs(sol.phi_b[np.argmin(np.abs(x - 0.0))])
    at_b = np.abs(sol.phi_b[np.argmin(np.abs(x - 1.0))])
    assert at_a < 1e-5 * scale and at_b < 1e-5 * scale
    right = x >= 1.0
    k_b = math.sqrt(2.0 * lam)
    q_b = k_b / 2.0
    ref = np.abs(np.sin(k_b * (x[right] - 1.0))) / math.sqrt(math.pi * q_b)
    assert np.allclose(np.abs(sol.phi_b[right]), ref, atol=2e-5 * np.max(ref))


def test_eigenfunction_continuity_at_junctions(rng):
    # u and w are continuous at a, b (zero coupling) and at breakpoints
    for _ in range(10):
        dev = random_device(rng)
        lam = dev.v_a + rng.uniform(0.2, 6.0)
        eps = 1e-9
        for p in (dev.a, dev.b, *dev.breakpoints[1:-1]):
            x = np.array([p - eps, p + eps])
            sol = eigenfunctions(dev, lam, grid=x)
            for fld in (sol.phi_b, sol.dphi_b, sol.phi_a, sol.dphi_a):
                scale = np.max(np.abs(fld))
                assert abs(fld[1] - fld[0]) < 1e-6 * scale


def test_delta_coupling_jump_condition():
    # w jumps by g * u across each coupling point, u stays continuous
    dev = FLAT
    lam = 1.7
    g = DeltaCouplings(2.0, 0.5)
    eps = 1e-10
    x = np.array([dev.a - eps, dev.a + eps, dev.b - eps, dev.b + eps])
    sol = eigenfunctions(dev, lam, g, grid=x)
    u, w = sol.phi_b, sol.dphi_b
    assert abs(u[1] - u[0]) < 1e-8 * abs(u[0])
    assert w[1] - w[0] == pytest.approx(g.g_a * u[0], rel=1e-6)
    assert w[3] - w[2] == pytest.approx(g.g_b * u[2], rel=1e-6)


def test_transmission_closed_below_threshold():
    dev = DeviceProfile(a=0.0, b=1.0, v_a=1.0, v_b=0.0)
    assert transmission(dev, 0.5) == 0.0
