"""Time-dependent Hamiltonians and unitary propagation.

Times are in units of 1/omega_ref and energies in units of hbar*omega_ref,
so the Schroedinger equation reads dU/dt = -i H(t) U.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, NoConvergence
from .qcore import SIGMA_Y, SIGMA_Z, DensityMatrix, _square

DEFAULT_T_FINAL = 2.0 * math.pi / 3.0
MAX_STEPS = 2**22
UNITARITY_DRIFT_TOL = 1e-12


class HamiltonianProtocol:
    """A driving protocol t -> H(t) on [t0, t1].

    Parameters
    ----------
    hamiltonian : callable
        Maps a time to a Hermitian (d, d) array.
    t0, t1 : float
        Measurement time and final time.
    """

    def __init__(self, hamiltonian: Callable[[float], np.ndarray], t0: float, t1: float):
        if t1 < t0:
            raise ValueError("t1 must not precede t0")
        self._hamiltonian = hamiltonian
        self.t0 = float(t0)
        self.t1 = float(t1)
        self.dim = np.asarray(hamiltonian(self.t0)).shape[0]

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self._hamiltonian(t), dtype=complex)

    def hamiltonians(self, times) -> np.ndarray:
        """Stack of H(t) for an array of times, shape (n, d, d)."""
        return np.stack([self(t) for t in np.asarray(times, dtype=float)])

    def initial_hamiltonian(self) -> np.ndarray:
        return self(self.t0)

    def final_hamiltonian(self) -> np.ndarray:
        return self(self.t1)

    def shifted(self, c: float) -> HamiltonianProtocol:
        """Same protocol with every H(t) moved by c times the identity."""
        eye = np.eye(self.dim)
        return HamiltonianProtocol(lambda t: self(t) + c * eye, self.t0, self.t1)


class RabiProtocol(HamiltonianProtocol):
    """Driven qubit H(t) = omega_q sigma_z/2 + rabi sigma_y cos(omega_q t + psi)."""

    def __init__(self, omega_q: float = 1.0, rabi: float = 0.0, psi: float = 0.0, t0: float = 0.0, t1: float = DEFAULT_T_FINAL):
        self.omega_q = float(omega_q)
        self.rabi = float(rabi)
        self.psi = float(psi)
        super().__init__(self._h, t0, t1)

    def _h(self, t):
        return 0.5 * self.omega_q * SIGMA_Z + self.rabi * math.cos(self.omega_q * t + self.psi) * SIGMA_Y

    def hamiltonians(self, times) -> np.ndarray:
        c = np.cos(self.omega_q * np.asarray(times, dtype=float) + self.psi)
        return 0.5 * self.omega_q * SIGMA_Z + (self.rabi * c)[:, None, None] * SIGMA_Y

    def __repr__(self):
        return f"RabiProtocol(omega_q={self.omega_q}, rabi={self.rabi}, psi={self.psi}, t0={self.t0}, t1={self.t1})"


class SuddenQuench(HamiltonianProtocol):
    """Instantaneous switch from ``h_initial`` to ``h_final``; the propagator is the identity."""

    def __init__(self, h_initial, h_final, t: float = 0.0):
        self._h_initial = np.array(h_initial, dtype=complex)
        self._h_final = np.array(h_final, dtype=complex)
        if self._h_initial.shape != self._h_final.shape:
            raise DimensionMismatch("initial and final Hamiltonians differ in shape")
        super().__init__(lambda _t: self._h_initial, t, t)

    def final_hamiltonian(self) -> np.ndarray:
        return self._h_final

    def shifted(self, c: float) -> SuddenQuench:
        eye = np.eye(self.dim)
        return SuddenQuench(self._h_initial + c * eye, self._h_final + c * eye, self.t0)


@dataclass(frozen=True, eq=False)
class Propagator:
    """U(t1, t0) with integration diagnostics.

    ``drift`` is max|U^dagger U - 1| before the polar projection and
    ``refinement`` the max-norm change at the last step doubling.
    """

    U: np.ndarray
    t0: float
    t1: float
    steps: int = 0
    drift: float = 0.0
    refinement: float = 0.0

    def unitarity_residual(self) -> float:
        d = self.U.shape[0]
        return float(np.max(np.abs(self.U.conj().T @ self.U - np.eye(d))))

    def then(self, later: Propagator) -> Propagator:
        """Composition: apply ``self`` first, then ``later``."""
        return Propagator(later.U @ self.U, self.t0, later.t1)


def _rk4_step_matrices(A0, Am, A1, h):
    # RK4 is linear in U, so each step is a fixed matrix M with U_{k+1} = M U_k
    eye = np.eye(A0.shape[-1])
    B2 = Am @ (eye + 0.5 * h * A0)
    B3 = Am @ (eye + 0.5 * h * B2)
    B4 = A1 @ (eye + h * B3)
    return eye + (h / 6.0) * (A0 + 2.0 * B2 + 2.0 * B3 + B4)


def _ordered_product(M: np.ndarray) -> np.ndarray:
    """M[n-1] @ ... @ M[1] @ M[0] by pairwise reduction."""
    while len(M) > 1:
        if len(M) % 2:
            M = np.concatenate([M, np.eye(M.shape[-1])[None]])
        M = M[1::2] @ M[0::2]
    return M[0]


def _rk4(protocol: HamiltonianProtocol, t0: float, t1: float, n: int) -> np.ndarray:
    h = (t1 - t0) / n
    H = protocol.hamiltonians(t0 + 0.5 * h * np.arange(2 * n + 1))
    A = -1j * H
    M = _rk4_step_matrices(A[0:-1:2], A[1::2], A[2::2], h)
    return _ordered_product(M)


def propagate(protocol: HamiltonianProtocol, t0: float | None = None, t1: float | None = None,
              tol: float = 1e-10, min_steps: int = 16) -> Propagator:
    """Integrate dU/dt = -i H(t) U from t0 to t1 with U(t0) = 1.

    Fixed-step RK4; the step count doubles until two successive solutions
    differ by less than ``tol`` in max norm. If the result drifts from
    unitarity by more than 1e-12 it is replaced by the closest unitary
    (polar factor).

    Raises
    ------
    NoConvergence
        If more than 2**22 steps would be needed.
    """
    t0 = protocol.t0 if t0 is None else float(t0)
    t1 = protocol.t1 if t1 is None else float(t1)
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    d = protocol.dim
    if t1 == t0:
        return Propagator(np.eye(d, dtype=complex), t0, t1)
    n = int(min_steps)
    prev = _rk4(protocol, t0, t1, n)
    while True:
        n *= 2
        if n > MAX_STEPS:
            raise NoConvergence(f"propagator not converged to {tol:g} within {MAX_STEPS} steps")
        U = _rk4(protocol, t0, t1, n)
        change = float(np.max(np.abs(U - prev)))
        if change < tol:
            break
        prev = U
    drift = float(np.max(np.abs(U.conj().T @ U - np.eye(d))))
    if drift > UNITARITY_DRIFT_TOL:
        w, _, vh = np.linalg.svd(U)
        U = w @ vh
    U.setflags(write=False)
    return Propagator(U, t0, t1, steps=n, drift=drift, refinement=change)


def evolve_state(rho, U) -> DensityMatrix:
    """U rho U^dagger."""
    r = _square(rho)
    u = U.U if isinstance(U, Propagator) else np.asarray(U, dtype=complex)
    if u.shape != r.shape:
        raise DimensionMismatch(f"propagator {u.shape} vs state {r.shape}")
    out = u @ r @ u.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T), atol=1e-10)
