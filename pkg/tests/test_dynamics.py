"""Box discretization, Crank-Nicolson evolution, and transient observables."""

import math

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from nesskit import (
    BoxParams,
    CouplingSchedule,
    DeviceProfile,
    ReservoirState,
    ResolutionError,
    SpectralParams,
    SystemConfig,
    WindowError,
    build_box,
    carrier_density,
    cn_step,
    current_observable,
    decoupled_modes,
    distribution_D,
    eigenfunctions,
    evolve_ensemble,
    moller_probe,
    projection_observable,
    region_charge_observable,
    transmission,
)

FLAT = DeviceProfile(a=0.0, b=1.0, m_a=1.0, v_a=0.0, m_b=1.0, v_b=0.0,
                     breakpoints=(0.0, 1.0), masses=(1.0,), potentials=(0.0,))
BARRIER = DeviceProfile(a=0.0, b=1.0, m_a=1.0, v_a=0.0, m_b=1.0, v_b=0.0,
                        breakpoints=(0.0, 1.0), masses=(1.0,), potentials=(1.5,))
WELL = DeviceProfile(a=0.0, b=1.0, m_a=1.0, v_a=0.6, m_b=1.0, v_b=0.0,
                     breakpoints=(0.0, 1.0), masses=(1.0,), potentials=(-10.0,))


def _config(device, x_min=-8.0, x_max=9.0, h=0.05, mu_a=1.0, mu_b=0.0,
            mu_i=0.5, beta=1.0, lambda_max=15.0, kind="exponential", alpha=1.0):
    return SystemConfig(
        device=device,
        reservoir_left=ReservoirState(mu=mu_a, beta=beta),
        reservoir_right=ReservoirState(mu=mu_b, beta=beta),
        reservoir_well=ReservoirState(mu=mu_i, beta=beta),
        spectral=SpectralParams(lambda_max=lambda_max),
        box=BoxParams(x_min=x_min, x_max=x_max, h=h),
        schedule=CouplingSchedule(kind=kind, alpha=alpha),
    )


def test_flat_box_spectrum_is_discrete_particle_in_box():
    cfg = _config(FLAT, x_min=-5.0, x_max=5.5, h=0.05)
    box = build_box(cfg)
    d, e = box.hamiltonian(0.0)
    vals = eigh_tridiagonal(d, e, select="v", select_range=(-1.0, 2.0))[0]
    L = box.x_right_wall - box.x_left_wall
    n = np.arange(1, vals.size + 1)
    # uniform coefficients: the stencil eigenvalues are exactly the
    # lattice dispersion of the continuum modes
    exact_discrete = 2.0 / box.h**2 * np.sin(n * math.pi * box.h / (2.0 * L)) ** 2
    np.testing.assert_allclose(vals, exact_discrete, rtol=1e-11)
    continuum = (n * math.pi / L) ** 2 / 2.0
    rel = np.abs(vals - continuum) / continuum
    assert np.all(rel < (n * math.pi / L * box.h) ** 2 / 8.0)


def test_box_snaps_and_cell_averaged_coefficients():
    dev = DeviceProfile(a=0.0, b=1.0, m_a=2.0, v_a=0.2, m_b=0.5, v_b=0.0,
                        breakpoints=(0.0, 0.37, 1.0), masses=(1.0, 1.0),
                        potentials=(1.5, -0.3))
    cfg = _config(dev, x_min=-3.27, x_max=4.73, h=0.1, lambda_max=2.0)
    box = build_box(cfg)
    assert box.snap_a == pytest.approx(0.03, abs=1e-12)
    assert box.snap_b == pytest.approx(0.03, abs=1e-12)
    assert box.snap_a < box.h / 2 and box.snap_b < box.h / 2
    assert box.x[box.n_a] == pytest.approx(0.03)
    assert box.x[box.n_b] == pytest.approx(1.03)
    # interior node at 0.33: cell [0.28, 0.38] straddles the 0.37 step
    i = int(round((0.33 - box.x_left_wall) / box.h)) - 1
    assert box.v_site[i] == pytest.approx((0.09 * 1.5 - 0.01 * 0.3) / 0.1)
    # node at 0.03: cell [-0.02, 0.08] straddles a
    assert box.v_site[box.n_a] == pytest.approx((0.02 * 0.2 + 0.08 * 1.5) / 0.1)
    # the snapped node sits 0.03 above a, so the mass step falls in the
    # link just below it: 0.07 at lead mass, 0.03 at interior mass
    assert box.m_link[box.n_a] == pytest.approx((0.07 * 2.0 + 0.03 * 1.0) / 0.1)
    assert box.m_link[box.n_a + 1] == pytest.approx(1.0)
    # links fully inside one segment take that segment's values
    assert box.m_link[2] == pytest.approx(2.0)
    assert box.v_site[box.n_sites - 2] == pytest.approx(0.0)


def test_box_rejects_underresolved_grid():
    with pytest.raises(ResolutionError, match="need h <"):
        build_box(_config(BARRIER, h=0.5, lambda_max=20.0))
    narrow = DeviceProfile(a=0.0, b=0.05, m_a=1.0, v_a=0.0, m_b=1.0, v_b=0.0,
                           breakpoints=(0.0, 0.05), masses=(1.0,), potentials=(0.0,))
    with pytest.raises(ResolutionError, match="between a and b"):
        build_box(_config(narrow, h=0.05, lambda_max=1.0))


def test_cn_step_applies_cayley_phase_to_eigenvectors():
    cfg = _config(FLAT, x_min=-4.0, x_max=5.0)
    box = build_box(cfg)
    d, e = box.hamiltonian(0.0)
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, 2))
    dt = 0.01
    for k in range(3):
        psi = vecs[:, k].astype(complex)
        out = cn_step(box, psi, 0.0, dt, g=0.0)
        expected = (1 - 0.5j * dt * vals[k]) / (1 + 0.5j * dt * vals[k]) * psi
        np.testing.assert_allclose(out, expected, atol=1e-13)


def test_cn_step_preserves_norm_across_switch(rng):
    cfg = _config(BARRIER, x_min=-6.0, x_max=7.0,
                  kind="exponential", alpha=5.0)
    box = build_box(cfg)
    psi = rng.standard_normal(box.n_sites) + 1j * rng.standard_normal(box.n_sites)
    psi /= box.h_norm(psi)
    t, dt = float(box.schedule.t_start), 0.01
    norms = [1.0]
    for _ in range(150):
        psi = cn_step(box, psi, t, dt)
        t += dt
        norms.append(float(box.h_norm(psi)))
    drift = np.abs(np.diff(norms))
    assert drift.max() < 1e-13
    assert abs(norms[-1] - 1.0) < 1e-12


def test_cn_step_discrete_continuity_is_exact(rng):
    # the Cayley update conserves charge region by region: the change in
    # any prefix sum equals -dt times the midpoint-state flux through
    # the boundary link, to rounding, coupling included
    cfg = _config(BARRIER, x_min=-6.0, x_max=7.0)
    box = build_box(cfg)
    psi = rng.standard_normal(box.n_sites) + 1j * rng.standard_normal(box.n_sites)
    psi /= box.h_norm(psi)
    out = cn_step(box, psi, -0.5, 0.01)  # g large: on-site terms active
    mid = 0.5 * (psi + out)
    dq = box.h * (np.abs(out) ** 2 - np.abs(psi) ** 2)
    for j in (5, box.n_a, box.n_b + 3, box.n_sites - 4):
        lhs = float(np.sum(dq[: j + 1]))
        rhs = -0.01 * float(box.link_flux(mid, j + 1))
        assert lhs == pytest.approx(rhs, abs=1e-13)


def test_free_gaussian_moves_at_group_velocity():
    cfg = _config(FLAT, x_min=-30.0, x_max=31.0, h=0.05)
    box = build_box(cfg)
    k0, sigma, x0 = 2.0, 2.0, -15.0
    psi = np.exp(1j * k0 * box.x - (box.x - x0) ** 2 / (4 * sigma**2)).astype(complex)
    psi /= box.h_norm(psi)
    t_end, dt = 4.0, 0.01
    for _ in range(int(t_end / dt)):
        psi = cn_step(box, psi, 0.0, dt, g=0.0)
    center = float(box.h * np.sum(box.x * np.abs(psi) ** 2))
    assert abs(center - (x0 + k0 * t_end)) / (k0 * t_end) < 0.01


def test_decoupled_ensemble_is_stationary_at_pinned_coupling():
    cfg = _config(WELL, mu_i=2.0, kind="sudden", alpha=None)
    box = build_box(cfg)
    ens = decoupled_modes(box, cfg)
    obs = [region_charge_observable(box, 0.0, 1.0, "well_charge"),
           current_observable(box, "point"),
           current_observable(box, "smoothed")]
    sched = CouplingSchedule(kind="sudden", alpha=None, t_start=-2.0)
    traces = evolve_ensemble(box, ens, sched, obs, t_end=-0.1, dt=0.01)
    assert all(tr.t[-1] < 0.0 for tr in traces)
    charge = traces[0].values
    assert np.max(np.abs(charge - charge[0])) < 1e-3
    for tr in traces[1:]:
        assert np.max(np.abs(tr.values)) < 1e-3
    # before the switch there is no ergodic mean to accumulate
    assert np.all(np.isnan(traces[0].running_mean))


def test_ensemble_blocks_signs_and_norms():
    cfg = _config(WELL, mu_i=2.0)
    box = build_box(cfg)
    ens = decoupled_modes(box, cfg)
    assert set(ens.blocks) == {"lead_a", "well", "lead_b"}
    np.testing.assert_allclose(box.h_norm(ens.psis), 1.0, atol=1e-12)
    assert np.all(ens.weights > 0.0)
    assert ens.dropped_weight < 1e-6 * ens.weights.sum()
    for i, block in enumerate(ens.blocks):
        psi = ens.psis[:, i].real
        if block == "lead_b":
            assert psi[box.n_b + 1] > 0.0
            assert abs(psi[box.n_a]) == 0.0
        elif block == "lead_a":
            assert psi[box.n_a - 1] < 0.0
        else:
            assert psi[box.n_a + 1] > 0.0
            # confined to the open interval between the barriers
            assert np.all(psi[: box.n_a + 1] == 0.0)
            assert np.all(psi[box.n_b:] == 0.0)
    # velocities come from the kinetic energy left after escaping
    k = np.flatnonzero(np.array(ens.blocks) == "lead_b")[0]
    expected = math.sqrt(2.0 * max(ens.energies[k] - 0.0, 0.0) / 1.0)
    assert ens.velocities[k] == pytest.approx(expected)


def test_initial_well_charge_matches_decoupled_density():
    cfg = _config(WELL, mu_i=2.0)
    box = build_box(cfg)
    ens = decoupled_modes(box, cfg)
    obs = region_charge_observable(box, 0.0, 1.0, "well_charge")
    box_charge = obs.measure(ens.psis, ens.weights)
    xs = np.linspace(0.0, 1.0, 801)
    u = carrier_density(cfg, distribution_D(cfg), xs).u
    exact_charge = float(np.trapezoid(u, xs))
    assert box_charge == pytest.approx(exact_charge, rel=0.01)


def test_current_observables_match_on_scattering_state():
    lam = 2.4
    cfg = _config(BARRIER, x_min=-12.0, x_max=13.0)
    box = build_box(cfg)
    sol = eigenfunctions(BARRIER, lam, grid=box.x)
    psis = sol.phi_b[:, None]
    weights = np.array([1.0])
    point = current_observable(box, "point").measure(psis, weights)
    smoothed = current_observable(box, "smoothed").measure(psis, weights)
    # the discrete flux of a two-beam state is link independent, so the
    # ramp average must reproduce the single-link value exactly
    assert smoothed == pytest.approx(point, rel=1e-12)
    expected = -transmission(BARRIER, lam) / (2.0 * math.pi)
    assert point == pytest.approx(expected, rel=0.01)


def test_running_mean_is_time_average(rng):
    cfg = _config(FLAT, x_min=-6.0, x_max=7.0, alpha=4.0)
    box = build_box(cfg)
    ens = decoupled_modes(box, cfg)
    obs = [current_observable(box, "point")]
    traces = evolve_ensemble(box, ens, box.schedule, obs, t_end=0.5, dt=0.01)
    tr = traces[0]
    assert np.all(np.isnan(tr.running_mean[tr.t < 0.0]))
    sel = tr.t >= 0.0
    ts, vs = tr.t[sel], tr.values[sel]
    manual = np.trapezoid(vs, ts) / (ts[-1] - ts[0])
    assert tr.running_mean[-1] == pytest.approx(manual, rel=1e-12)
    assert tr.late_window_mean() == pytest.approx(
        np.mean(vs[ts >= 0.75 * ts[-1]]), rel=1e-12)


def test_window_truncation_is_reported():
    cfg = _config(FLAT, x_min=-4.0, x_max=5.0, kind="sudden", alpha=None)
    box = build_box(cfg)
    ens = decoupled_modes(box, cfg)
    obs = [current_observable(box, "point")]
    traces = evolve_ensemble(box, ens, box.schedule, obs, t_end=100.0, dt=0.01)
    meta = traces[0].meta
    assert meta["warnings"] and "truncated" in meta["warnings"][0]
    assert meta["t_end"] < 100.0
    assert meta["t_end_requested"] == 100.0


def test_observable_placement_is_validated():
    cfg = _config(BARRIER)
    box = build_box(cfg)
    with pytest.raises(ValueError, match="right lead"):
        current_observable(box, "point", x_c=0.5)
    with pytest.raises(ValueError, match="right lead"):
        current_observable(box, "smoothed", x_c=box.x_right_wall - box.h)
    with pytest.raises(ValueError, match="variant"):
        current_observable(box, "windowed")


def test_moller_probe_flat_device_phase_and_modulus():
    cfg = _config(FLAT, x_min=-40.0, x_max=41.0, lambda_max=20.0)
    box = build_box(cfg)
    res = moller_probe(box, cfg, 1.2, "b")
    assert abs(res.phase - math.pi / 2) < 0.1
    assert res.modulus == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValueError, match="channel"):
        moller_probe(box, cfg, 1.2, "c")
    with pytest.raises(ValueError, match="channel floor"):
        moller_probe(box, cfg, -0.5, "b")
    with pytest.raises(WindowError, match="wall"):
        moller_probe(box, cfg, 1.2, "b", t_prep=40.0)


def test_projection_observable_tracks_mode_occupation():
    cfg = _config(WELL, mu_i=2.0)
    box = build_box(cfg)
    ens = decoupled_modes(box, cfg)
    well_members = [i for i, b in enumerate(ens.blocks) if b == "well"]
    k = well_members[0]
    obs = projection_observable(box, ens.psis[:, k], "occ")
    # ensemble members are orthogonal, so only member k contributes
    assert obs.measure(ens.psis, ens.weights) == pytest.approx(
        float(ens.weights[k]), rel=1e-10)
