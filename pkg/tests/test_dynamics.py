import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from qfluct.dynamics import (
    DEFAULT_T_FINAL,
    HamiltonianProtocol,
    Propagator,
    RabiProtocol,
    SuddenQuench,
    evolve_state,
    propagate,
)
from qfluct.errors import DimensionMismatch, NoConvergence
from qfluct.qcore import DensityMatrix, dephase, random_density_matrix, spectral_decompose

RATIO_PAPER = 1e6 / 6.541e9


def _state_vector_oracle(r, psi, t1, y0):
    """Two-component Schroedinger equation i dy/dt = H(t) y with H written out by hand."""

    def rhs(t, y):
        a, b = y[0] + 1j * y[1], y[2] + 1j * y[3]
        c = r * math.cos(t + psi)
        # H = [[1/2, -i c], [i c, -1/2]]
        da = -1j * (0.5 * a - 1j * c * b)
        db = -1j * (1j * c * a - 0.5 * b)
        return [da.real, da.imag, db.real, db.imag]

    y = np.array([y0[0].real, y0[0].imag, y0[1].real, y0[1].imag])
    sol = solve_ivp(rhs, (0.0, t1), y, method="DOP853", rtol=1e-13, atol=1e-14)
    out = sol.y[:, -1]
    return np.array([out[0] + 1j * out[1], out[2] + 1j * out[3]])


def test_rabi_hamiltonian_form():
    p = RabiProtocol(omega_q=1.0, rabi=0.3, psi=0.2)
    t = 0.7
    want = np.array([[0.5, -1j * 0.3 * math.cos(t + 0.2)], [1j * 0.3 * math.cos(t + 0.2), -0.5]])
    np.testing.assert_allclose(p(t), want, atol=1e-16)
    np.testing.assert_allclose(p.hamiltonians([t])[0], want, atol=1e-16)
    assert p.t1 == DEFAULT_T_FINAL == 2 * math.pi / 3


def test_zero_drive_gives_pure_phases():
    U = propagate(RabiProtocol(rabi=0.0)).U
    t = DEFAULT_T_FINAL
    np.testing.assert_allclose(U, np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)]), atol=1e-10)


def test_identity_for_empty_interval():
    p = RabiProtocol(rabi=0.2, t0=1.0, t1=1.0)
    assert np.array_equal(propagate(p).U, np.eye(2))


@pytest.mark.parametrize("seed", range(3))
def test_constant_hamiltonian_matches_expm(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    H = A + A.conj().T
    dt = 1.3
    U = propagate(HamiltonianProtocol(lambda t: H, 0.0, dt)).U
    assert np.max(np.abs(U - expm(-1j * H * dt))) < 1e-9


@pytest.mark.parametrize("r", [RATIO_PAPER, 0.05, 0.3])
@pytest.mark.parametrize("psi", [0.0, math.pi / 4])
def test_eigenstate_excitation_matches_state_vector_oracle(r, psi):
    p = RabiProtocol(rabi=r, psi=psi)
    U = propagate(p)
    H0 = spectral_decompose(p.initial_hamiltonian())
    H1 = spectral_decompose(p.final_hamiltonian())
    ground = H0.eigenvectors[:, 0]
    rho1 = evolve_state(DensityMatrix.pure(ground), U)
    got = float(np.real(np.trace(H1.projectors[1] @ rho1.matrix)))
    y = _state_vector_oracle(r, psi, p.t1, ground.astype(complex))
    want = float(np.real(y.conj() @ H1.projectors[1] @ y))
    assert abs(got - want) < 1e-8


@pytest.mark.parametrize("r", [RATIO_PAPER, 1e-5, 0.1, 1.0, 3.0])
def test_unitarity_over_sweep_ranges(r):
    U = propagate(RabiProtocol(rabi=r, psi=math.pi / 4))
    assert U.unitarity_residual() < 1e-9
    assert U.drift < 1e-9


def test_composition():
    p = RabiProtocol(rabi=0.4, psi=0.3)
    tm = 0.9
    split = propagate(p, 0.0, tm).then(propagate(p, tm, p.t1))
    assert np.max(np.abs(split.U - propagate(p).U)) < 1e-8
    assert (split.t0, split.t1) == (0.0, p.t1)


def test_no_convergence_on_step_budget(monkeypatch):
    import qfluct.dynamics as dyn

    monkeypatch.setattr(dyn, "MAX_STEPS", 64)
    with pytest.raises(NoConvergence):
        propagate(RabiProtocol(rabi=0.5, t1=200.0))


def test_polar_projection_restores_unitarity():
    # a coarse tolerance leaves visible RK4 drift, which must be projected out
    U = propagate(HamiltonianProtocol(lambda t: np.diag([0.0, 40.0]), 0.0, 10.0), tol=1e-3)
    assert U.drift > 1e-12
    assert U.unitarity_residual() < 1e-12


def test_reversed_interval_rejected():
    with pytest.raises(ValueError):
        propagate(RabiProtocol(), 1.0, 0.5)


def test_evolve_state_examples():
    rho = random_density_matrix(2, np.random.default_rng(3))
    ident = Propagator(np.eye(2, dtype=complex), 0.0, 0.0)
    np.testing.assert_allclose(evolve_state(rho, ident).matrix, rho.matrix, atol=1e-16)
    U = propagate(RabiProtocol(rabi=0.3))
    out = evolve_state(DensityMatrix.pure([0.6, 0.8j]), U)
    assert abs(out.purity() - 1) < 1e-10
    out = evolve_state(rho, U)
    np.testing.assert_allclose(np.sort(out.eigenvalues()), np.sort(rho.eigenvalues()), atol=1e-10)
    assert abs(np.trace(out.matrix) - 1) < 1e-10
    with pytest.raises(DimensionMismatch):
        evolve_state(np.eye(3) / 3, U)


def test_zero_drive_freezes_populations():
    p = RabiProtocol(rabi=0.0, psi=0.4)
    H = spectral_decompose(p.initial_hamiltonian())
    rho = np.diag([0.8, 0.2])
    out = evolve_state(rho, propagate(p))
    np.testing.assert_allclose(dephase(out, H).matrix, rho, atol=1e-10)


def test_sudden_quench():
    q = SuddenQuench(np.diag([-0.5, 0.5]), np.diag([0.5, -0.5]))
    assert q.t0 == q.t1
    np.testing.assert_array_equal(propagate(q).U, np.eye(2))
    np.testing.assert_array_equal(q.final_hamiltonian(), np.diag([0.5, -0.5]))
    shifted = q.shifted(2.0)
    np.testing.assert_array_equal(shifted.final_hamiltonian(), np.diag([2.5, 1.5]))


def test_shifted_protocol_changes_only_global_phase():
    p = RabiProtocol(rabi=0.2)
    U = propagate(p).U
    V = propagate(p.shifted(1.5)).U
    np.testing.assert_allclose(V, np.exp(-1.5j * p.t1) * U, atol=1e-9)
