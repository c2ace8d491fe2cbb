import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leonrs.constants import SPEED_OF_LIGHT as C
from leonrs.errors import GeometryError, WeightingError
from leonrs.geometry import SatelliteState, UeState
from leonrs.navigation import (PseudorangeSet, bancroft_init, build_weighting, concentrated_cost, design_matrix,
                               elevation_sigma, jacobian_map, simulate_decoded_links, simulate_pseudoranges,
                               wls_solve)
from leonrs.pso import PsoConfig, pso_maximize
from leonrs.waveform import SamplingWindow


def noiseless(sats, ue):
    return simulate_pseudoranges(sats, ue, np.random.default_rng(0), sigmas=np.zeros(len(sats)))


def test_bancroft_noiseless(desk_scene):
    ue = desk_scene.ues[0]
    p, b = bancroft_init(desk_scene.sats, noiseless(desk_scene.sats, ue))
    assert np.linalg.norm(p - ue.position) < 1e-3
    assert b == pytest.approx(ue.clock_error, abs=1e-11)


def test_wls_noiseless_from_offset_start(desk_scene):
    ue = desk_scene.ues[1]
    pr = noiseless(desk_scene.sats, ue)
    fix = wls_solve(desk_scene.sats, pr, ue.position + np.array([3e3, -2e3, 1e3]), desk_scene.Phi[1],
                    max_iters=20, tol=1e-9)
    assert fix.converged
    assert np.linalg.norm(fix.position - ue.position) < 1e-6
    assert fix.clock == pytest.approx(ue.clock_error, abs=1e-14)


def test_wls_too_few_satellites(desk_scene):
    sats = desk_scene.sats[:3]
    pr = noiseless(sats, desk_scene.ues[0])
    with pytest.raises(GeometryError):
        wls_solve(sats, pr, np.zeros(3))
    with pytest.raises(GeometryError):
        bancroft_init(sats, pr)


def test_jacobian_identity(desk_scene):
    q = np.array([s.position for s in desk_scene.sats])
    Z, _ = design_matrix(q, desk_scene.ues[0].position)
    for Phi in (desk_scene.Phi[0], np.eye(len(q)), np.diag(np.linspace(0.2, 1, len(q)))):
        J = jacobian_map(Z, Phi)
        # entrywise relative to the magnitude of the terms being summed: the
        # clock column is c while the direction columns are unit size
        scale = np.abs(J) @ np.abs(Z)
        assert np.all(np.abs(J @ Z - C * np.eye(4)) <= 1e-9 * scale)


def test_wls_equals_ls_for_square_system(desk_scene):
    assert desk_scene.K == 4
    q = np.array([s.position for s in desk_scene.sats])
    Z, _ = design_matrix(q, desk_scene.ues[0].position)
    np.testing.assert_allclose(jacobian_map(Z, desk_scene.Phi[0]), jacobian_map(Z, np.eye(4)), rtol=1e-8,
                               atol=1e-8 * C)


@given(st.lists(st.floats(0.05, np.pi / 2), min_size=1, max_size=10))
@settings(max_examples=100, deadline=None)
def test_weighting_properties(el):
    Phi = build_weighting(el)
    d = np.diag(Phi)
    assert np.max(d) == pytest.approx(1.0)
    assert np.all(d > 0)
    np.testing.assert_array_equal(Phi, np.diag(d))
    order = np.argsort(el)
    assert np.all(np.diff(d[order]) >= -1e-15)


def test_weighting_all_zero():
    with pytest.raises(WeightingError):
        build_weighting([0.0, 0.0])


def test_elevation_sigma():
    assert elevation_sigma(np.pi / 2) == pytest.approx(5.0)
    assert elevation_sigma(np.pi / 6, 2.0) == pytest.approx(4.0)


def test_pseudorange_noise_statistics(desk_scene):
    rng = np.random.default_rng(5)
    ue = desk_scene.ues[0]
    ref = noiseless(desk_scene.sats, ue).rho
    draws = np.array([simulate_pseudoranges(desk_scene.sats, ue, rng).rho - ref for _ in range(4000)])
    sig = elevation_sigma(desk_scene.elevations[0])
    np.testing.assert_allclose(draws.std(axis=0), sig, rtol=0.05)
    assert np.all(np.abs(draws.mean(axis=0)) < 4 * sig / np.sqrt(4000))


def test_bancroft_picks_earth_root():
    # four satellites around a UE on the equator
    sats = [SatelliteState(np.array(x, float), np.zeros(3)) for x in
            ([7.0e6, 0, 0], [6.8e6, 1.2e6, 0], [6.8e6, -0.5e6, 1.1e6], [6.9e6, 0.3e6, -1.0e6])]
    ue = UeState(np.array([6.371e6, 0, 0]), clock_error=2e-7)
    pr = simulate_pseudoranges(sats, ue, np.random.default_rng(0), sigmas=np.zeros(4))
    p, b = bancroft_init(sats, pr)
    np.testing.assert_allclose(p, ue.position, atol=1e-4)
    assert b * C == pytest.approx(2e-7 * C, abs=1e-4)


def test_concentrated_cost_peaks_at_truth(desk_scene):
    sc = desk_scene
    m = 0
    window = SamplingWindow(duration=2e-4)
    links = simulate_decoded_links(sc.signals[m], np.ones(sc.K), sc.delays[m], sc.dopplers[m], window)
    ue = sc.ues[m]
    truth = ue.velocity
    g = np.vstack([truth, truth + [5, 0, 0], truth + [0, -5, 0], truth + [0, 0, 5]])
    cost = concentrated_cost(links, sc.sats, ue.position, ue.clock_error, window, 35e9, g)
    assert np.argmax(cost) == 0
    assert cost[0] == pytest.approx(sum(np.sum(np.abs(l.samples) ** 2) for l in links), rel=1e-9)


def test_pso_finds_quadratic_max():
    rng = np.random.default_rng(0)
    f = lambda x: -np.sum((x - np.array([1.0, -2.0])) ** 2, axis=1)
    x, fx, hist = pso_maximize(f, [-5, -5], [5, 5], rng, PsoConfig(particles=20, iterations=60))
    np.testing.assert_allclose(x, [1.0, -2.0], atol=1e-3)
    assert np.all(np.diff(hist) >= 0)
