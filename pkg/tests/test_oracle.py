import math

import numpy as np
import pytest

from gaugecavity import oracle
from gaugecavity.errors import TruncationError
from gaugecavity.field import (
    QuadratureGrid,
    Representation,
    SpinorField,
    coherent_amplitude,
    coherent_state,
    initial_state,
    overlap,
)
from gaugecavity.model import ModelKind, ModelSpec
from gaugecavity.propagator import propagate_state

ATOM = np.array([-1.0, 1.0]) / math.sqrt(2.0)


def rabi(**kw):
    return ModelSpec(ModelKind.RABI, 1.0, kw.pop("g", 0.3), atom_splitting=kw.pop("big", 1.2), **kw)


def test_canonical_commutator():
    x, p = oracle.quadrature_operators(20)
    c = x @ p - p @ x
    # exact except in the last level, where truncation bites
    assert np.allclose(c[:-1, :-1], 1j * np.eye(19), atol=1e-13)


def test_hermite_functions_orthonormal():
    x = np.linspace(-15, 15, 6001)
    h = oracle.hermite_functions(30, x)
    gram = h @ h.T * (x[1] - x[0])
    assert np.abs(gram - np.eye(30)).max() < 1e-10


def test_hermite_functions_match_numpy():
    x = np.linspace(-4, 4, 17)
    h = oracle.hermite_functions(8, x)
    for n in range(8):
        c = np.zeros(n + 1)
        c[n] = 1.0
        ref = np.polynomial.hermite.hermval(x, c) * np.exp(-0.5 * x * x)
        ref /= math.sqrt(2.0**n * math.factorial(n) * math.sqrt(math.pi))
        assert np.allclose(h[n], ref, atol=1e-13)


@pytest.mark.parametrize("x0,p0", [(0.0, 2.0), (1.5, -1.0), (-2.0, 0.5)])
def test_fock_coherent_maps_to_grid_coherent(x0, p0):
    """Checks the momentum-space basis phases (-i)^n against the grid's coherent state.

    D(alpha)|0> carries the extra global phase exp(i x0 p0 / 2) relative to the grid form.
    """
    spec = rabi()
    n_max = 40
    grid = QuadratureGrid(1, 128, (10.0,))
    psi = oracle.product_state([1.0, 0.0], [oracle.fock_coherent(coherent_amplitude(x0, p0), n_max)])
    f = oracle.fock_to_grid(psi, grid, spec, n_max)
    ref = coherent_state(grid, x0, p0) * np.exp(0.5j * x0 * p0)
    assert np.abs(f.amplitudes[0] - ref).max() < 1e-10
    assert np.abs(f.amplitudes[1]).max() == 0.0


def test_fock_coherent_statistics():
    alpha = coherent_amplitude(1.0, 2.0)
    c = oracle.fock_coherent(alpha, 40)
    n = np.arange(40)
    assert abs(np.sum(n * np.abs(c) ** 2) - abs(alpha) ** 2) < 1e-12
    a = oracle.annihilation(40)
    assert abs(np.vdot(c, a @ c) - alpha) < 1e-12


def test_fock_coherent_truncation():
    with pytest.raises(TruncationError):
        oracle.fock_coherent(coherent_amplitude(0.0, 4.0), 20)


def test_observables_of_coherent_state():
    spec = ModelSpec(ModelKind.BIMODAL_RABI, 1.0, 0.3, atom_splitting=1.2)
    n_max = 25
    psi = oracle.product_state(ATOM, [oracle.fock_coherent(coherent_amplitude(0.0, 2.0), n_max),
                                      oracle.fock_coherent(coherent_amplitude(1.0, 0.0), n_max)])
    nrm, pops, x, p = oracle.fock_observables(psi, spec, n_max)
    assert nrm == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(pops, (0.5, 0.5))
    assert np.allclose(x, (0.0, 1.0), atol=1e-10)
    assert np.allclose(p, (2.0, 0.0), atol=1e-10)


@pytest.mark.parametrize("kind", list(ModelKind))
def test_hamiltonian_hermitian(kind):
    spec = ModelSpec(kind, 1.0, 0.4, atom_splitting=1.0, atomic_energies=(0.0, 0.1, 1.0))
    h = oracle.build_hamiltonian(spec, oracle.FockConfig(8))
    assert h.shape[0] == 8**spec.n_modes * spec.internal_dim
    assert np.abs(h - h.conj().T).max() < 1e-14


def test_hamiltonian_dimension_guard():
    spec = ModelSpec(ModelKind.BIMODAL_LAMBDA, 1.0, 0.4)
    with pytest.raises(ValueError):
        oracle.build_hamiltonian(spec, oracle.FockConfig(90))


def test_config_validation():
    with pytest.raises(ValueError):
        oracle.FockConfig(2)
    with pytest.raises(ValueError):
        oracle.FockConfig(10, "Euler")


def test_rk4_agrees_with_dense():
    spec = rabi()
    n_max = 30
    psi0 = oracle.product_state(ATOM, [oracle.fock_coherent(coherent_amplitude(0.0, 2.0), n_max)])
    h = oracle.build_hamiltonian(spec, oracle.FockConfig(n_max))
    dense = oracle.propagate(psi0, h, 2.0, oracle.FockConfig(n_max))
    rk4 = oracle.propagate(psi0, h, 2.0, oracle.FockConfig(n_max, "RK4", 1e-3))
    assert np.abs(dense - rk4).max() < 1e-9


def test_rk4_step_halving_guard():
    spec = rabi()
    n_max = 30
    psi0 = oracle.product_state(ATOM, [oracle.fock_coherent(coherent_amplitude(0.0, 2.0), n_max)])
    h = oracle.build_hamiltonian(spec, oracle.FockConfig(n_max))
    with pytest.raises(ValueError):
        oracle.propagate(psi0, h, 2.0, oracle.FockConfig(n_max, "RK4", 0.1))


def test_tail_check_raises():
    # strong coupling pushes population into high Fock levels
    spec = rabi(g=3.0)
    n_max = 16
    psi0 = oracle.product_state(ATOM, [oracle.fock_coherent(0.5, n_max)])
    h = oracle.build_hamiltonian(spec, oracle.FockConfig(n_max))
    with pytest.raises(TruncationError):
        oracle.propagate(psi0, h, 3.0, oracle.FockConfig(n_max), spec=spec)


def test_kappa_decay_in_fock_basis():
    spec = rabi(g=0.0, kappa=0.1)
    n_max = 30
    alpha = coherent_amplitude(1.0, 2.0)
    psi0 = oracle.product_state([1.0, 0.0], [oracle.fock_coherent(alpha, n_max)])
    h = oracle.build_hamiltonian(spec, oracle.FockConfig(n_max), losses=True)
    psi = oracle.propagate(psi0, h, 2.0, oracle.FockConfig(n_max))
    expected = math.exp(abs(alpha) ** 2 * (math.exp(-0.4) - 1.0))
    assert np.vdot(psi, psi).real == pytest.approx(expected, abs=1e-10)


def test_grid_matches_oracle_short_run():
    spec = rabi()
    n_max = 40
    grid = QuadratureGrid(1, 128, (10.0,))
    state = initial_state(spec, grid, ATOM, [(0.0, 2.0)])
    fin = propagate_state(state, spec, 1e-3, 2.0)
    psi0 = oracle.product_state(ATOM, [oracle.fock_coherent(coherent_amplitude(0.0, 2.0), n_max)])
    h = oracle.build_hamiltonian(spec, oracle.FockConfig(n_max))
    psi = oracle.propagate(psi0, h, 2.0, oracle.FockConfig(n_max), spec=spec)
    ref = oracle.fock_to_grid(psi, grid, spec, n_max)
    assert 1.0 - abs(overlap(ref, fin)) ** 2 < 1e-10


def test_lossy_grid_matches_oracle():
    spec = rabi(kappa=0.05, gamma=0.08)
    n_max = 40
    grid = QuadratureGrid(1, 128, (10.0,))
    state = initial_state(spec, grid, ATOM, [(0.0, 2.0)])
    fin = propagate_state(state, spec, 1e-3, 2.0, losses=True)
    psi0 = oracle.product_state(ATOM, [oracle.fock_coherent(coherent_amplitude(0.0, 2.0), n_max)])
    h = oracle.build_hamiltonian(spec, oracle.FockConfig(n_max), losses=True)
    psi = oracle.propagate(psi0, h, 2.0, oracle.FockConfig(n_max))
    ref = oracle.fock_to_grid(psi, grid, spec, n_max)
    assert np.abs(ref.amplitudes - fin.amplitudes).max() < 1e-5


def test_fock_to_grid_resolution_guard():
    spec = rabi()
    psi = oracle.product_state([1.0, 0.0], [oracle.fock_coherent(coherent_amplitude(0.0, 4.0), 60)])
    with pytest.raises(ValueError):
        oracle.fock_to_grid(psi, QuadratureGrid(1, 16, (10.0,)), spec, 60)
    with pytest.raises(ValueError):
        oracle.fock_to_grid(psi, QuadratureGrid(1, 128, (4.0,)), spec, 60)


def test_grid_field_type():
    spec = rabi()
    psi = oracle.product_state(ATOM, [oracle.fock_coherent(0.3, 20)])
    f = oracle.fock_to_grid(psi, QuadratureGrid(1, 64, (8.0,)), spec, 20)
    assert isinstance(f, SpinorField) and f.representation is Representation.P
