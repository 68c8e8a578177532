"""Coefficients of the time-local memory operator for the collective bath.

The memory operator driving each trajectory expands over the 13 single-entry
transition channels, organized by order in the noise:

* ``c0`` (8 complex functions of t): noise-free coefficients.  They satisfy a
  closed quadratic ODE system coupled to the bath-averaged first-order
  kernels.
* ``c1bar`` (4) and ``c2bar`` (1): bath-averaged first- and second-order
  kernels.  ``c2bar`` is integrated as a truncation diagnostic; whether it
  feeds back into ``c1bar`` is switchable (``include_top``), and it is never
  part of the propagated operator.
* per-trajectory noise functionals ``nf`` (4): realizations of the
  first-order kernel convolved with the (shifted) noise.  Differentiating
  that convolution in time, using the vanishing equal-time kernel data and
  the exponential bath correlation, closes them into a driven linear ODE:
  the generator is the first-order kernel evolution matrix (the averaged
  system with one bath-decay factor removed) and the drive is the moving
  boundary value times the current noise.  This replaces an O(n^2)
  quadrature per trajectory with an O(n) recursion; the quadrature is kept
  in :func:`kernel_grid_check` as an independent verification route.

All noise-independent systems are integrated jointly with classical RK4 on a
half-step grid so the trajectory stepper has midpoint values available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .backend import njit
from .model import CHANNEL_COLS, CHANNEL_ROWS, DIM, SystemParams

N_COEFF = 13  # 8 noise-free + 4 first-order averages + 1 second-order average


class CoefficientBlowupError(RuntimeError):
    """Nonfinite value met while integrating the coefficient system."""

    def __init__(self, time: float):
        super().__init__(f"coefficient integration blew up at t = {time:.6g}")
        self.time = time


def coeff_rhs(y, kappa, Gamma, gamma, wA, wB, include_top, dy):
    """Right-hand side of the joint 13-component coefficient system.

    Layout: y[0:8] noise-free coefficients, y[8:12] first-order averages,
    y[12] second-order average.  ``include_top`` gates the feedback of y[12]
    into y[8] and y[10]; y[12] itself is always integrated.
    """
    f1, f2, f3, f4, f5, f6, f7, f8 = y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]
    p9, p10, p11, p12, p13 = y[8], y[9], y[10], y[11], y[12]
    k = kappa
    s = 0.5 * Gamma * gamma
    top = p13 if include_top else 0.0 + 0.0j

    dy[0] = ((-gamma + 2j * wA - 1j * wB) * f1 + f1 * f3 + f1 * f4
             - k * f1 * f8 + k * f3 * f4 - k * f4 * f5 - k * p10)
    dy[1] = (s + (-gamma + 1j * wA) * f2 + f2 * f2 - f1 * f6 - f2 * f3
             + k * f2 * f6 - k * f2 * f7 - k * f4 * f6 - p9 - k * p11)
    dy[2] = (s + (-gamma + 1j * wA) * f3 + f1 * f7 + f3 * f3 + k * f3 * f7
             - k * f3 * f8 - k * f5 * f7 - k * p12)
    dy[3] = (s + (-gamma + 1j * wA) * f4 + f1 * f7 - f1 * f8 + f4 * f4
             - f4 * f5 + f4 * f7 - p10)
    dy[4] = s + (-gamma + 1j * wA) * f5 + f5 * f5 + k * f5 * f8
    dy[5] = (k * s + (-gamma + 1j * wB) * f6 + f2 * f6 - f2 * f7 - f4 * f6
             + k * f6 * f6 - p11)
    dy[6] = (k * s + (-gamma + 1j * wB) * f7 + f3 * f7 - f3 * f8 + f4 * f7
             - f5 * f7 + k * f7 * f7 - p12)
    dy[7] = k * s + (-gamma + 1j * wB) * f8 + f5 * f8 + k * f8 * f8

    dy[8] = ((-2.0 * gamma + 2j * wA) * p9 + s * (-k * f1 + f2 - f3)
             + f1 * p11 + f2 * p9 - k * f2 * p12 + f3 * p9 + k * f3 * p11
             - k * f5 * p11 + k * f6 * p9 - k * f6 * p10 - k * f8 * p9
             - 2.0 * k * top)
    dy[9] = ((-2.0 * gamma + 2j * wA) * p10 + s * (k * f1 + f4 - f5)
             + f1 * p12 + f4 * p10 + k * f4 * p12 + f5 * p10 + k * f8 * p10)
    dy[10] = ((-2.0 * gamma + 1j * (wA + wB)) * p11 + s * (k * f2 - k * f4 + f6 - f7)
              + f2 * p11 - f2 * p12 + f4 * p11 - f5 * p11 - f6 * p10
              + k * f6 * p11 + f7 * p9 + k * f7 * p11 - f8 * p9 - 2.0 * top)
    dy[11] = ((-2.0 * gamma + 1j * (wA + wB)) * p12 + s * (k * f3 - k * f5 + f7 - f8)
              + f3 * p12 + f5 * p12 + f7 * p10 + k * f7 * p12 + k * f8 * p12)
    dy[12] = ((-3.0 * gamma + 1j * (2.0 * wA + wB)) * p13
              + 0.5 * s * (k * p9 - k * p10 + p11 - p12)
              + f2 * p13 + f5 * p13 + k * f6 * p13 + p9 * p12
              + k * f8 * p13 + p10 * p11 + k * p11 * p12)
    return dy


if backend.HAVE_NUMBA:
    coeff_rhs = njit(cache=True)(coeff_rhs)


def _coeff_loop_py(m, h, kappa, Gamma, gamma, wA, wB, include_top, out):
    y = np.zeros(N_COEFF, dtype=np.complex128)
    k1 = np.empty(N_COEFF, dtype=np.complex128)
    k2 = np.empty(N_COEFF, dtype=np.complex128)
    k3 = np.empty(N_COEFF, dtype=np.complex128)
    k4 = np.empty(N_COEFF, dtype=np.complex128)
    out[0] = y
    for i in range(1, m):
        coeff_rhs(y, kappa, Gamma, gamma, wA, wB, include_top, k1)
        coeff_rhs(y + (0.5 * h) * k1, kappa, Gamma, gamma, wA, wB, include_top, k2)
        coeff_rhs(y + (0.5 * h) * k2, kappa, Gamma, gamma, wA, wB, include_top, k3)
        coeff_rhs(y + h * k3, kappa, Gamma, gamma, wA, wB, include_top, k4)
        y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        out[i] = y
        for j in range(N_COEFF):
            if not (np.isfinite(y[j].real) and np.isfinite(y[j].imag)):
                return i
    return m


if backend.HAVE_NUMBA:
    _coeff_loop_jit = njit(cache=True)(_coeff_loop_py)


@dataclass
class CoeffTables:
    """Half-step-gridded coefficient tables shared read-only by trajectories."""

    t: np.ndarray          # half-step grid, length 2*n_steps + 1
    c0: np.ndarray         # (m, 8) noise-free coefficients
    c1bar: np.ndarray      # (m, 4) bath-averaged first-order kernels
    c2bar: np.ndarray      # (m,) bath-averaged second-order kernel (diagnostic)
    nf_matrix: np.ndarray  # (m, 4, 4) noise-functional generator
    nf_source: np.ndarray  # (m, 4) boundary source multiplying the noise
    include_top: bool
    dt: float

    @property
    def c0_grid(self) -> np.ndarray:
        """Noise-free coefficients on the full-step grid."""
        return self.c0[::2]

    @property
    def c1bar_grid(self) -> np.ndarray:
        return self.c1bar[::2]

    @property
    def c2bar_grid(self) -> np.ndarray:
        return self.c2bar[::2]


def nf_generator(c0, kappa: float, gamma: float, wA: float, wB: float):
    """Evolution matrix and boundary source of the first-order kernels.

    ``c0`` has shape (..., 8); returns matrices of shape (..., 4, 4) and
    sources of shape (..., 4).  The same generator evolves the per-trajectory
    noise functionals and the columns of the verification kernel grid.
    """
    c0 = np.asarray(c0)
    lead = c0.shape[:-1]
    f1, f2, f3, f4 = c0[..., 0], c0[..., 1], c0[..., 2], c0[..., 3]
    f5, f6, f7, f8 = c0[..., 4], c0[..., 5], c0[..., 6], c0[..., 7]
    k = kappa
    amat = np.zeros(lead + (4, 4), dtype=complex)
    amat[..., 0, 0] = (-gamma + 2j * wA) + f2 + f3 + k * f6 - k * f8
    amat[..., 0, 1] = -k * f6
    amat[..., 0, 2] = f1 + k * f3 - k * f5
    amat[..., 0, 3] = -k * f2
    amat[..., 1, 1] = (-gamma + 2j * wA) + f4 + f5 + k * f8
    amat[..., 1, 3] = f1 + k * f4
    amat[..., 2, 0] = f7 - f8
    amat[..., 2, 1] = -f6
    amat[..., 2, 2] = (-gamma + 1j * (wA + wB)) + f2 + f4 - f5 + k * f6 + k * f7
    amat[..., 2, 3] = -f2
    amat[..., 3, 1] = f7
    amat[..., 3, 3] = (-gamma + 1j * (wA + wB)) + f3 + f5 + k * f7 + k * f8
    src = np.zeros(lead + (4,), dtype=complex)
    src[..., 0] = -k * f1 + f2 - f3
    src[..., 1] = k * f1 + f4 - f5
    src[..., 2] = k * (f2 - f4) + f6 - f7
    src[..., 3] = k * (f3 - f5) + f7 - f8
    return amat, src


def integrate_coeff_tables(params: SystemParams, include_top: bool = True,
                           backend_name: str | None = None) -> CoeffTables:
    """Integrate the joint coefficient system from zero initial data.

    RK4 at half the trajectory step; raises :class:`CoefficientBlowupError`
    (reporting the blow-up time) if the quadratic system diverges.
    """
    h = 0.5 * params.dt
    m = 2 * params.n_steps + 1
    out = np.empty((m, N_COEFF), dtype=complex)
    use = backend.resolve_backend(backend_name)
    loop = _coeff_loop_jit if (use == "numba" and backend.HAVE_NUMBA) else _coeff_loop_py
    reached = loop(m, h, params.kappa, params.Gamma, params.gamma,
                   params.omega_A, params.omega_B, include_top, out)
    if reached < m:
        raise CoefficientBlowupError(reached * h)
    amat, src = nf_generator(out[:, :8], params.kappa, params.gamma,
                             params.omega_A, params.omega_B)
    return CoeffTables(t=h * np.arange(m), c0=out[:, :8], c1bar=out[:, 8:12],
                       c2bar=out[:, 12], nf_matrix=amat, nf_source=src,
                       include_top=include_top, dt=params.dt)


def step_noise_functionals(nf: np.ndarray, k: int, tables: CoeffTables,
                           drive: complex) -> np.ndarray:
    """One RK4 step of the driven noise-functional system over grid step k.

    The noise value is held at its step value; the generator is evaluated at
    the step endpoints and midpoint from the half-step tables.
    """
    a0, a1, a2 = tables.nf_matrix[2 * k], tables.nf_matrix[2 * k + 1], tables.nf_matrix[2 * k + 2]
    b0, b1, b2 = tables.nf_source[2 * k], tables.nf_source[2 * k + 1], tables.nf_source[2 * k + 2]
    dt = tables.dt
    k1 = a0 @ nf + b0 * drive
    k2 = a1 @ (nf + 0.5 * dt * k1) + b1 * drive
    k3 = a1 @ (nf + 0.5 * dt * k2) + b1 * drive
    k4 = a2 @ (nf + dt * k3) + b2 * drive
    return nf + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def memory_operator(c0_row: np.ndarray, nf: np.ndarray | None,
                    order: int) -> np.ndarray:
    """Assemble the 6x6 memory operator from coefficients at one instant.

    Order 0 uses the 8 noise-free channels; order 1 adds the 4 first-order
    noise functionals.  The second-order channel is never included.
    """
    op = np.zeros((DIM, DIM), dtype=complex)
    for j in range(8):
        op[CHANNEL_ROWS[j], CHANNEL_COLS[j]] += c0_row[j]
    if order == 1 and nf is not None:
        for j in range(4):
            op[CHANNEL_ROWS[8 + j], CHANNEL_COLS[8 + j]] += nf[j]
    return op


MAX_KERNEL_GRID_POINTS = 20001


@dataclass
class KernelGridCheck:
    """Results of the triangular-grid verification route.

    ``quad_alpha[k]`` is the bath-kernel-weighted trapezoid quadrature of the
    first-order kernels at t_k (to compare with ``c1bar`` integrated with the
    second-order feedback off); ``quad_noise[k]`` is the quadrature against a
    supplied noise path (to compare with the noise-functional ODE).
    """

    t: np.ndarray
    quad_alpha: np.ndarray              # (n, 4)
    quad_noise: np.ndarray | None       # (n, 4) when a noise path was given
    boundary: np.ndarray                # (n, 4) kernel values at s1 = t
    final_row: np.ndarray               # (4, n) kernels at t = t_max


def kernel_grid_check(params: SystemParams, tables: CoeffTables,
                      noise_path: np.ndarray | None = None) -> KernelGridCheck:
    """Evolve the first-order kernels on the full triangular grid (tests only).

    Columns are born on the diagonal with the boundary values and evolve in t
    under the shared generator; rows are reduced to running quadratures, so
    memory stays O(n).  Guarded to grids of at most 20001 points.
    """
    n = params.n_points
    if n > MAX_KERNEL_GRID_POINTS:
        raise ValueError(
            f"kernel grid limited to {MAX_KERNEL_GRID_POINTS} points (got {n})")
    if noise_path is not None and len(noise_path) != n:
        raise ValueError("noise path length must match the grid")
    dt = params.dt
    gamma = params.gamma
    alpha0 = 0.5 * params.Gamma * params.gamma
    amat, src = tables.nf_matrix, tables.nf_source

    row = np.zeros((4, n), dtype=complex)   # row[:, m] = kernels(t, s1_m)
    row[:, 0] = src[0]
    quad_alpha = np.zeros((n, 4), dtype=complex)
    quad_noise = np.zeros((n, 4), dtype=complex) if noise_path is not None else None
    boundary = np.zeros((n, 4), dtype=complex)
    boundary[0] = src[0]

    for k in range(n - 1):
        cols = row[:, :k + 1]
        a0, a1, a2 = amat[2 * k], amat[2 * k + 1], amat[2 * k + 2]
        k1 = a0 @ cols
        k2 = a1 @ (cols + 0.5 * dt * k1)
        k3 = a1 @ (cols + 0.5 * dt * k2)
        k4 = a2 @ (cols + dt * k3)
        row[:, :k + 1] = cols + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        row[:, k + 1] = src[2 * (k + 1)]
        boundary[k + 1] = src[2 * (k + 1)]
        w = np.full(k + 2, dt)
        w[0] = w[-1] = 0.5 * dt
        ker = alpha0 * np.exp(-gamma * dt * np.arange(k + 1, -1, -1.0))
        quad_alpha[k + 1] = (row[:, :k + 2] * (w * ker)).sum(axis=1)
        if noise_path is not None:
            quad_noise[k + 1] = row[:, :k + 2] @ (w * noise_path[:k + 2])

    return KernelGridCheck(t=dt * np.arange(n), quad_alpha=quad_alpha,
                           quad_noise=quad_noise, boundary=boundary,
                           final_row=row)
