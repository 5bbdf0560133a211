import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toposense.boundstates import analytic_bound_energy, analytic_overlap
from toposense.dynamics import (OccupationTrace, TimeGrid, approx_population, approx_survival,
                                dephased_population, excited_population, lindblad_evolve,
                                no_jump_population, population_from_spectral, rabi_reference,
                                renewal_population, survival_amplitude)
from toposense.model import (DisorderSpec, ModelParams, NumericalError, ParameterDomainError,
                             build_hamiltonian, eigendecompose)

P0 = ModelParams(N=201, delta=0.2, g=0.1)


@pytest.fixture(scope="module")
def spec201():
    return eigendecompose(build_hamiltonian(P0))


def test_time_grid_validation():
    with pytest.raises(ParameterDomainError):
        TimeGrid([0.0, 1.0, 1.0])
    with pytest.raises(ParameterDomainError):
        TimeGrid([-1.0, 1.0])
    with pytest.raises(ParameterDomainError):
        TimeGrid([0.0, np.inf])
    with pytest.raises(ParameterDomainError):
        TimeGrid([])
    g = TimeGrid.linspace(10, 11)
    assert len(g) == 11 and g.step == pytest.approx(1.0)


def test_trace_range_check():
    g = TimeGrid([0.0, 1.0])
    tr = OccupationTrace.from_raw(g, [1 + 5e-10, -5e-10])
    np.testing.assert_array_equal(tr.p1, [1.0, 0.0])
    with pytest.raises(NumericalError):
        OccupationTrace.from_raw(g, [1.0, 1.01])


def test_survival_at_zero(spec201):
    assert abs(survival_amplitude(spec201, 0.0) - 1) <= 1e-10


def test_survival_quarter_period(spec201):
    t = np.pi / (2 * analytic_bound_energy(P0))
    assert abs(survival_amplitude(spec201, t)) <= 0.02


def test_survival_vs_two_level(spec201):
    S = survival_amplitude(spec201, 10.0)
    assert abs(S - approx_survival(P0, 10.0)) <= 0.02


def test_population_close_to_two_level(spec201):
    grid = TimeGrid(np.linspace(0, 100, 2001))
    tr = excited_population(spec201, grid)
    assert tr.p1[0] == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(tr.p1 - approx_population(P0, grid.t))) <= 0.05


def test_decoupled_emitter_is_stationary():
    p = ModelParams(N=41, g=0.0)
    tr = excited_population(eigendecompose(build_hamiltonian(p)), TimeGrid.linspace(100, 50))
    np.testing.assert_allclose(tr.p1, 1.0, atol=1e-12)


def test_unitarity(spec201):
    s = spec201
    for t in (0.0, 7.3, 55.0, 300.0):
        psi = s.vectors @ (np.exp(-1j * s.energies * t) * s.vectors[0])
        assert abs(np.sum(np.abs(psi) ** 2) - 1) <= 1e-10
        assert abs(psi[0] - survival_amplitude(s, t)) <= 1e-12


def test_spectral_batch_matches_single(spec201):
    t = np.linspace(0, 50, 11)
    stacked = np.stack([spec201.energies, spec201.energies * 1.1])
    w = np.stack([spec201.emitter_weights] * 2)
    P = population_from_spectral(stacked, w, t)
    assert P.shape == (2, 11)
    np.testing.assert_allclose(P[0], np.abs(survival_amplitude(spec201, t)) ** 2, atol=1e-13)


def test_approx_population_values():
    E, b = analytic_bound_energy(P0), analytic_overlap(P0)
    assert approx_population(P0, 0.0) == pytest.approx(4 * b**4)
    assert approx_population(P0, 0.0) == pytest.approx(0.9887, abs=1e-4)
    assert approx_population(P0, np.pi / (2 * E)) == pytest.approx(0.0, abs=1e-15)
    period = np.pi / E
    assert period == pytest.approx(42.27, abs=0.01)
    t = np.linspace(0, 80, 17)
    np.testing.assert_allclose(approx_population(P0, t + period), approx_population(P0, t),
                               atol=1e-12)


def test_rabi_reference():
    E, b = analytic_bound_energy(P0), analytic_overlap(P0)
    assert rabi_reference(P0, 0.0) == 1.0
    assert rabi_reference(P0, np.pi / E) == pytest.approx(1.0)
    t = np.linspace(0, 200, 401)
    diff = rabi_reference(P0, t) - approx_population(P0, t)
    np.testing.assert_allclose(diff, (1 - 4 * b**4) * np.cos(E * t) ** 2, atol=1e-14)
    assert np.all(diff >= 0)


def test_validity_window_n100():
    p = ModelParams(N=100)
    s = eigendecompose(build_hamiltonian(p))
    period = np.pi / analytic_bound_energy(p)

    def dev(t):
        return np.abs(excited_population(s, TimeGrid(t)).p1 - approx_population(p, t))

    assert dev(np.linspace(0, 50, 1001)).max() <= 0.05
    # one Rabi period ending at N/2 versus one ending at 2N
    early = dev(np.linspace(50 - period, 50, 1001)).max()
    late = dev(np.linspace(200 - period, 200, 1001)).max()
    assert late > early


@pytest.mark.parametrize("W", [0.0, 0.2])
def test_lindblad_without_dephasing_is_unitary(W):
    p = ModelParams(N=21, delta=0.25, g=0.15)
    H = build_hamiltonian(p, DisorderSpec(W, 4))
    grid = TimeGrid(np.linspace(0, 100, 51))
    rk = lindblad_evolve(H, 0.0, grid)
    ex = excited_population(eigendecompose(H), grid)
    assert rk.p1[0] == 1.0
    np.testing.assert_allclose(rk.p1, ex.p1, atol=1e-6)


def test_renewal_matches_master_equation():
    p = ModelParams(N=41)
    H = build_hamiltonian(p)
    grid = TimeGrid(np.linspace(0, 60, 31))
    rk = lindblad_evolve(H, 0.1, grid)
    ren = dephased_population(H, 0.1, grid)
    assert rk.p1[0] == 1.0
    np.testing.assert_allclose(ren.p1, rk.p1, atol=2e-6)


def test_renewal_without_dephasing_is_unitary():
    H = build_hamiltonian(ModelParams(N=61))
    t = np.linspace(0, 80, 41)
    np.testing.assert_allclose(renewal_population(H, 0.0, TimeGrid(t)),
                               excited_population(eigendecompose(H), TimeGrid(t)).p1, atol=1e-8)
    np.testing.assert_allclose(no_jump_population(H, 0.0, t),
                               excited_population(eigendecompose(H), TimeGrid(t)).p1, atol=1e-10)


def test_negative_rate_rejected():
    H = build_hamiltonian(ModelParams(N=5))
    with pytest.raises(ParameterDomainError):
        lindblad_evolve(H, -0.1, TimeGrid([0.0, 1.0]))
    with pytest.raises(ParameterDomainError):
        renewal_population(H, -0.1, TimeGrid([0.0, 1.0]))


def test_dephasing_damps_oscillation():
    H = build_hamiltonian(P0)
    period = np.pi / analytic_bound_energy(P0)
    grid = TimeGrid(np.linspace(60, 60 + period, 801))
    stats = []
    for gamma in (0.0, 0.01, 0.05):
        p = dephased_population(H, gamma, grid).p1
        stats.append((p.mean(), p.max() - p.min()))
    means, contrasts = zip(*stats)
    mixed = 1.0 / (P0.N + 1)
    # fully dephased steady state is the identity / (N+1)
    assert means[0] > means[1] > means[2] > mixed
    assert contrasts[0] > contrasts[1] > contrasts[2]


def test_dephasing_envelope_n201():
    H = build_hamiltonian(P0)
    grid = TimeGrid(np.linspace(0, 100, 401))
    clean = excited_population(eigendecompose(H), grid).p1
    noisy = dephased_population(H, 0.05, grid).p1
    late = grid.t > 50
    assert noisy[0] == pytest.approx(1.0)
    assert noisy[late].max() - noisy[late].min() < 0.8 * (clean[late].max() - clean[late].min())


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 60), st.floats(-0.6, 0.6), st.floats(-0.5, 0.5), st.floats(-0.3, 0.3),
       st.floats(0, 500))
def test_survival_bounded(N, delta, g, Delta, t):
    s = eigendecompose(build_hamiltonian(ModelParams(N=N, delta=delta, g=g, Delta=Delta)))
    assert abs(survival_amplitude(s, 0.0) - 1) <= 1e-10
    assert abs(survival_amplitude(s, t)) <= 1 + 1e-10


@settings(max_examples=10, deadline=None)
@given(st.integers(3, 15), st.floats(0.0, 0.5), st.integers(0, 1000))
def test_master_equation_preserves_probability(N, gamma, seed):
    H = build_hamiltonian(ModelParams(N=N, delta=0.3, g=0.2), DisorderSpec(0.1, seed))
    tr = lindblad_evolve(H, gamma, TimeGrid(np.linspace(0, 20, 5)))
    assert np.all((tr.raw >= -1e-9) & (tr.raw <= 1 + 1e-9))
    assert tr.p1[0] == 1.0
