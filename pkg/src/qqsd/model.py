"""Operators, parameters and states of the dissipative qubit-qutrit pair.

Basis convention (used by every module, fixed once here): the qutrit level
``a in {0, 1, 2}`` comes first, the qubit level ``b in {0, 1}`` second, and the
composite index is ``2*a + b``::

    index 0: |0>_A |0>_B      index 3: |1>_A |1>_B
    index 1: |0>_A |1>_B      index 4: |2>_A |0>_B
    index 2: |1>_A |0>_B      index 5: |2>_A |1>_B

Local operators are written in ascending level order, so the qutrit z
component is diag(-1, 0, +1) and the lowering operators map level l -> l-1.
The collective coupling operator is ``L = A_lower (x) I + kappa * I (x) B_lower``
with the asymmetry ``kappa`` weighting the qubit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

DIM = 6

# local operators, ascending level order
QUTRIT_SZ = np.diag([-1.0, 0.0, 1.0]).astype(complex)
QUTRIT_LOWER = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
QUBIT_SZ = 0.5 * np.diag([-1.0, 1.0]).astype(complex)
QUBIT_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)
QUBIT_RAISE = QUBIT_LOWER.T.conj()

_I2 = np.eye(2, dtype=complex)
_I3 = np.eye(3, dtype=complex)

#: (row, column) of the single nonzero entry of each of the 13 transition
#: operators, in order.  The first 8 carry the noise-free coefficients of the
#: memory operator, 9..12 the first-order noise functionals, 13 the dropped
#: second-order channel.
CHANNEL_ROWS = np.array([1, 3, 1, 2, 0, 4, 2, 0, 1, 0, 2, 0, 0], dtype=np.int64)
CHANNEL_COLS = np.array([4, 5, 3, 4, 2, 5, 3, 1, 5, 4, 5, 3, 5], dtype=np.int64)

INITIAL_STATE_TAGS = ("bell", "product-20", "psi-kappa", "phi-kappa")


class ParameterError(ValueError):
    """Raised when simulation parameters violate a validity constraint."""


def composite_index(a: int, b: int) -> int:
    """Array index of the product state |a>_A |b>_B."""
    if not (0 <= a <= 2 and 0 <= b <= 1):
        raise ValueError(f"invalid local levels (a={a}, b={b})")
    return 2 * a + b


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters plus the numerical grid settings.

    ``order`` selects the truncation of the memory-operator expansion in the
    noise: 0 keeps only the noise-free coefficients, 1 adds the first-order
    noise functionals (default).
    """

    omega_A: float = 1.0
    omega_B: float = 1.0
    kappa: float = 1.0
    Gamma: float = 1.0
    gamma: float = 0.3
    dt: float = 1e-3
    t_max: float = 10.0
    n_traj: int = 1000
    seed: int = 1234
    order: int = 1

    def __post_init__(self):
        if self.kappa < 0:
            raise ParameterError(f"kappa must be >= 0 (got {self.kappa})")
        if self.Gamma < 0:
            raise ParameterError(f"Gamma must be >= 0 (got {self.Gamma})")
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be > 0 (got {self.gamma})")
        if self.dt <= 0:
            raise ParameterError(f"dt must be > 0 (got {self.dt})")
        if self.t_max < self.dt:
            raise ParameterError(
                f"t_max must be >= dt (got t_max={self.t_max}, dt={self.dt})")
        if self.n_traj < 1:
            raise ParameterError(f"n_traj must be >= 1 (got {self.n_traj})")
        if self.dt * self.gamma >= 0.5:
            raise ParameterError(
                f"stability guard dt*gamma < 0.5 violated (dt*gamma = {self.dt * self.gamma})")
        if self.dt * max(abs(self.omega_A), abs(self.omega_B)) >= 0.1:
            raise ParameterError(
                "stability guard dt*max(omega_A, omega_B) < 0.1 violated "
                f"(value = {self.dt * max(abs(self.omega_A), abs(self.omega_B))})")
        if self.order not in (0, 1):
            raise ParameterError(f"order must be 0 or 1 (got {self.order})")

    @property
    def n_steps(self) -> int:
        return int(np.floor(self.t_max / self.dt + 1e-9))

    @property
    def n_points(self) -> int:
        return self.n_steps + 1

    def time_grid(self) -> np.ndarray:
        return self.dt * np.arange(self.n_points)


def build_hamiltonian(params: SystemParams) -> np.ndarray:
    """Diagonal system Hamiltonian omega_A * Sz_A + omega_B * Sz_B on the pair."""
    return (params.omega_A * np.kron(QUTRIT_SZ, _I2)
            + params.omega_B * np.kron(_I3, QUBIT_SZ))


def hamiltonian_diagonal(params: SystemParams) -> np.ndarray:
    """Real diagonal of the Hamiltonian (it is diagonal by construction)."""
    return np.real(np.diag(build_hamiltonian(params)))


def build_lindblad(params: SystemParams) -> np.ndarray:
    """Collective lowering operator L = A_lower (x) I + kappa * I (x) B_lower."""
    return np.kron(QUTRIT_LOWER, _I2) + params.kappa * np.kron(_I3, QUBIT_LOWER)


def build_basis_operators() -> list[np.ndarray]:
    """The 13 single-entry transition operators of the memory-operator expansion.

    Each returned 6x6 matrix has exactly one entry equal to 1.  Summing
    channels 2..5 plus kappa times channels 6..8 reproduces the collective
    lowering operator for any kappa.
    """
    ops = []
    for r, c in zip(CHANNEL_ROWS, CHANNEL_COLS):
        m = np.zeros((DIM, DIM), dtype=complex)
        m[r, c] = 1.0
        ops.append(m)
    return ops


def make_initial_state(spec, kappa: float | None = None) -> np.ndarray:
    """Build a normalized 6-component initial state.

    ``spec`` is one of the named tags ("bell", "product-20", "psi-kappa",
    "phi-kappa") or a sequence of 6 complex amplitudes.  The kappa-dependent
    tags require ``kappa``.  Custom amplitudes are normalized; a warning is
    emitted if their norm deviates from 1 by more than 1e-6.
    """
    if isinstance(spec, str):
        if spec == "bell":
            v = np.zeros(DIM, dtype=complex)
            v[composite_index(0, 0)] = 1.0
            v[composite_index(1, 1)] = 1.0
            return v / np.sqrt(2.0)
        if spec == "product-20":
            v = np.zeros(DIM, dtype=complex)
            v[composite_index(2, 0)] = 1.0
            return v
        if spec in ("psi-kappa", "phi-kappa"):
            if kappa is None:
                raise ValueError(f"initial state '{spec}' requires kappa")
            v = np.zeros(DIM, dtype=complex)
            if spec == "psi-kappa":
                v[composite_index(1, 0)] = kappa
                v[composite_index(0, 1)] = -1.0
            else:
                v[composite_index(2, 0)] = kappa
                v[composite_index(1, 1)] = -1.0
            return v / np.sqrt(1.0 + kappa**2)
        raise ValueError(f"unknown initial state tag '{spec}'")

    v = np.asarray(spec, dtype=complex)
    if v.shape != (DIM,):
        raise ValueError(f"custom initial state must have 6 amplitudes (got shape {v.shape})")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("custom initial state must not be all zero")
    if abs(norm - 1.0) > 1e-6:
        warnings.warn(f"custom initial state normalized (input norm {norm:.6g})")
    return v / norm
