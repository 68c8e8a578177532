"""Negativity via partial transpose over the qubit, plus purity/populations.

With the qutrit-first tensor order the partial transpose swaps the qubit
indices inside each 2x2 sub-block, i.e. (a,b; a',b') -> (a,b'; a',b).  For
2x3 states a positive negativity is necessary and sufficient for
entanglement; it is 1 on maximally entangled states and 0 on separable ones.
"""

from __future__ import annotations

import numpy as np

NEG_EIGENVALUE_CUTOFF = 1e-12


def partial_transpose_qubit(rho: np.ndarray) -> np.ndarray:
    """Transpose the qubit factor: (a,b; a',b') -> (a,b'; a',b)."""
    return np.asarray(rho).reshape(3, 2, 3, 2).transpose(0, 3, 2, 1).reshape(6, 6)


def negativity(rho: np.ndarray, eps: float = NEG_EIGENVALUE_CUTOFF) -> float:
    """Twice the absolute sum of negative partial-transpose eigenvalues.

    Eigenvalues above -eps are treated as roundoff; genuine small negative
    eigenvalues of Monte Carlo estimates are kept (they belong to the
    estimator).  Clamped to >= 0.
    """
    ev = np.linalg.eigvalsh(partial_transpose_qubit(rho))
    neg = ev[ev < -eps]
    return max(0.0, 2.0 * float(np.abs(neg).sum()))


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def populations(rho: np.ndarray) -> np.ndarray:
    return np.real(np.diag(rho)).copy()


def schmidt_negativity(psi: np.ndarray) -> float:
    """Independent pure-state oracle: twice the product of the two Schmidt
    coefficients of the 3x2 amplitude matrix."""
    amp = np.asarray(psi, dtype=complex).reshape(3, 2)
    sv = np.linalg.svd(amp, compute_uv=False)
    return 2.0 * float(sv[0] * sv[1])
