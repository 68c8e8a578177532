"""Hot trajectory-propagation kernels.

Two implementations of the same stepping scheme: a scalar per-trajectory loop
compiled with numba (parallel over the block) and a vectorized numpy fallback
(trajectory axis broadcast).  Selection defaults to numba when importable and
not disabled via QQSD_NO_NUMBA; both can be requested explicitly for
cross-checks and benchmarks.

Stepping scheme per grid step (noise and memory operator frozen at their
step values): exact diagonal Hamiltonian rotation, Heun predictor-corrector
on the remaining drift; norm-preserving mode renormalizes each step and the
linear mode carries an overflow guard.  The first-order noise functionals
advance with RK4 on the half-step coefficient tables, and the shift memory
with the exact exponential decay plus a one-sided rectangle injection.
"""

from __future__ import annotations

import numpy as np

from . import backend
from .backend import njit, prange
from .model import CHANNEL_COLS, CHANNEL_ROWS, hamiltonian_diagonal

_R = CHANNEL_ROWS
_C = CHANNEL_COLS

LINEAR_NORM_CAP = 1e12
MIN_NORM = 1e-12


# ---------------------------------------------------------------------------
# scalar helpers (numba-compiled when available)
# ---------------------------------------------------------------------------

def _expect_lower(psi, kappa):
    # <L> with explicit normalization; safe for non-unit predictors
    n2 = 0.0
    for i in range(6):
        n2 += psi[i].real ** 2 + psi[i].imag ** 2
    e = 0.0 + 0.0j
    e += np.conj(psi[0]) * (psi[2] + kappa * psi[1])
    e += np.conj(psi[1]) * psi[3]
    e += np.conj(psi[2]) * (psi[4] + kappa * psi[3])
    e += np.conj(psi[3]) * psi[5]
    e += np.conj(psi[4]) * (kappa * psi[5])
    return e / n2


def _g_nonlinear(psi, coef, zt, kappa, v_mem, v_low, v_mix, out):
    n2 = 0.0
    for i in range(6):
        n2 += psi[i].real ** 2 + psi[i].imag ** 2
        v_mem[i] = 0.0 + 0.0j
    for j in range(12):
        v_mem[_R[j]] += coef[j] * psi[_C[j]]
    v_low[0] = psi[2] + kappa * psi[1]
    v_low[1] = psi[3]
    v_low[2] = psi[4] + kappa * psi[3]
    v_low[3] = psi[5]
    v_low[4] = kappa * psi[5]
    v_low[5] = 0.0 + 0.0j
    v_mix[0] = 0.0 + 0.0j
    v_mix[1] = kappa * v_mem[0]
    v_mix[2] = v_mem[0]
    v_mix[3] = v_mem[1] + kappa * v_mem[2]
    v_mix[4] = v_mem[2]
    v_mix[5] = v_mem[3] + kappa * v_mem[4]
    e_low = 0.0 + 0.0j
    e_mem = 0.0 + 0.0j
    e_mix = 0.0 + 0.0j
    for i in range(6):
        c = np.conj(psi[i])
        e_low += c * v_low[i]
        e_mem += c * v_mem[i]
        e_mix += c * v_mix[i]
    e_low /= n2
    e_mem /= n2
    e_mix /= n2
    e_raise = np.conj(e_low)
    # drift = Delta(L) z~ - Delta(L^dag Obar) + <L^dag> Delta(Obar); the
    # mixed term enters with a minus sign exactly as in the linear equation
    for i in range(6):
        out[i] = (zt * (v_low[i] - e_low * psi[i])
                  - (v_mix[i] - e_mix * psi[i])
                  + e_raise * (v_mem[i] - e_mem * psi[i]))


def _g_linear(psi, coef, z, kappa, v_mem, v_low, v_mix, out):
    for i in range(6):
        v_mem[i] = 0.0 + 0.0j
    for j in range(12):
        v_mem[_R[j]] += coef[j] * psi[_C[j]]
    v_low[0] = psi[2] + kappa * psi[1]
    v_low[1] = psi[3]
    v_low[2] = psi[4] + kappa * psi[3]
    v_low[3] = psi[5]
    v_low[4] = kappa * psi[5]
    v_low[5] = 0.0 + 0.0j
    v_mix[0] = 0.0 + 0.0j
    v_mix[1] = kappa * v_mem[0]
    v_mix[2] = v_mem[0]
    v_mix[3] = v_mem[1] + kappa * v_mem[2]
    v_mix[4] = v_mem[2]
    v_mix[5] = v_mem[3] + kappa * v_mem[4]
    for i in range(6):
        out[i] = z * v_low[i] - v_mix[i]


def _matvec4(a, x, src, zt, out):
    for i in range(4):
        acc = src[i] * zt
        for j in range(4):
            acc += a[i, j] * x[j]
        out[i] = acc


if backend.HAVE_NUMBA:
    _expect_lower = njit(cache=True)(_expect_lower)
    _g_nonlinear = njit(cache=True)(_g_nonlinear)
    _g_linear = njit(cache=True)(_g_linear)
    _matvec4 = njit(cache=True)(_matvec4)


def _propagate_block_loop(psi0, zb, uphase, kappa, gamma, Gamma, dt,
                          c0g, amat, bsrc, nonlinear, order1, stride_steps,
                          norm_cap, states, eld, drift, fail, fail_step):
    n_steps = zb.shape[1] - 1
    decay = np.exp(-gamma * dt)
    inject = 0.5 * Gamma * gamma * dt
    for b in prange(zb.shape[0]):
        psi = psi0.copy()
        nf = np.zeros(4, np.complex128)
        coef = np.zeros(12, np.complex128)
        v_mem = np.empty(6, np.complex128)
        v_low = np.empty(6, np.complex128)
        v_mix = np.empty(6, np.complex128)
        g1 = np.empty(6, np.complex128)
        g2 = np.empty(6, np.complex128)
        pred = np.empty(6, np.complex128)
        raw = np.empty(6, np.complex128)
        zk1 = np.empty(4, np.complex128)
        zk2 = np.empty(4, np.complex128)
        zk3 = np.empty(4, np.complex128)
        zk4 = np.empty(4, np.complex128)
        ztmp = np.empty(4, np.complex128)
        mem = 0.0 + 0.0j
        drift_acc = 0.0
        for k in range(n_steps + 1):
            e_low = _expect_lower(psi, kappa)
            if k % stride_steps == 0:
                si = k // stride_steps
                for i in range(6):
                    states[b, si, i] = psi[i]
                eld[b, si] = np.conj(e_low)
                drift[b, si] = drift_acc
                drift_acc = 0.0
            if k == n_steps:
                break
            z = zb[b, k]
            zt = z + mem if nonlinear else z
            for j in range(8):
                coef[j] = c0g[k, j]
            if order1:
                for j in range(4):
                    coef[8 + j] = nf[j]
            if nonlinear:
                _g_nonlinear(psi, coef, zt, kappa, v_mem, v_low, v_mix, g1)
            else:
                _g_linear(psi, coef, zt, kappa, v_mem, v_low, v_mix, g1)
            for i in range(6):
                pred[i] = uphase[i] * (psi[i] + dt * g1[i])
            if nonlinear:
                _g_nonlinear(pred, coef, zt, kappa, v_mem, v_low, v_mix, g2)
            else:
                _g_linear(pred, coef, zt, kappa, v_mem, v_low, v_mix, g2)
            for i in range(6):
                raw[i] = uphase[i] * (psi[i] + 0.5 * dt * g1[i]) + 0.5 * dt * g2[i]
            nrm2 = 0.0
            for i in range(6):
                nrm2 += raw[i].real ** 2 + raw[i].imag ** 2
            nrm = np.sqrt(nrm2)
            bad = not np.isfinite(nrm)
            if nonlinear:
                bad = bad or nrm < MIN_NORM
            else:
                bad = bad or nrm > norm_cap
            if bad:
                fail[b] = 1
                fail_step[b] = k
                break
            if nonlinear:
                d = abs(nrm - 1.0)
                if d > drift_acc:
                    drift_acc = d
                for i in range(6):
                    psi[i] = raw[i] / nrm
            else:
                for i in range(6):
                    psi[i] = raw[i]
            if order1:
                a0 = amat[2 * k]
                a1 = amat[2 * k + 1]
                a2 = amat[2 * k + 2]
                _matvec4(a0, nf, bsrc[2 * k], zt, zk1)
                for j in range(4):
                    ztmp[j] = nf[j] + 0.5 * dt * zk1[j]
                _matvec4(a1, ztmp, bsrc[2 * k + 1], zt, zk2)
                for j in range(4):
                    ztmp[j] = nf[j] + 0.5 * dt * zk2[j]
                _matvec4(a1, ztmp, bsrc[2 * k + 1], zt, zk3)
                for j in range(4):
                    ztmp[j] = nf[j] + dt * zk3[j]
                _matvec4(a2, ztmp, bsrc[2 * k + 2], zt, zk4)
                for j in range(4):
                    nf[j] += (dt / 6.0) * (zk1[j] + 2.0 * (zk2[j] + zk3[j]) + zk4[j])
            if nonlinear:
                mem = mem * decay + inject * np.conj(e_low)


if backend.HAVE_NUMBA:
    _propagate_block_jit = njit(cache=True, parallel=True)(_propagate_block_loop)


# ---------------------------------------------------------------------------
# vectorized numpy fallback (trajectory axis = 0)
# ---------------------------------------------------------------------------

def _apply_lower_np(psi, kappa):
    out = np.zeros_like(psi)
    out[:, 0] = psi[:, 2] + kappa * psi[:, 1]
    out[:, 1] = psi[:, 3]
    out[:, 2] = psi[:, 4] + kappa * psi[:, 3]
    out[:, 3] = psi[:, 5]
    out[:, 4] = kappa * psi[:, 5]
    return out


def _apply_memory_np(psi, c0row, nf):
    out = np.zeros_like(psi)
    for j in range(8):
        out[:, _R[j]] += c0row[j] * psi[:, _C[j]]
    if nf is not None:
        for j in range(4):
            out[:, _R[8 + j]] += nf[:, j] * psi[:, _C[8 + j]]
    return out


def _apply_raise_np(v, kappa):
    out = np.zeros_like(v)
    out[:, 1] = kappa * v[:, 0]
    out[:, 2] = v[:, 0]
    out[:, 3] = v[:, 1] + kappa * v[:, 2]
    out[:, 4] = v[:, 2]
    out[:, 5] = v[:, 3] + kappa * v[:, 4]
    return out


def _g_nonlinear_np(psi, c0row, nf, zt, kappa):
    n2 = np.einsum('bi,bi->b', psi.conj(), psi).real
    v_mem = _apply_memory_np(psi, c0row, nf)
    v_low = _apply_lower_np(psi, kappa)
    v_mix = _apply_raise_np(v_mem, kappa)
    e_low = np.einsum('bi,bi->b', psi.conj(), v_low) / n2
    e_mem = np.einsum('bi,bi->b', psi.conj(), v_mem) / n2
    e_mix = np.einsum('bi,bi->b', psi.conj(), v_mix) / n2
    e_raise = e_low.conj()
    return (zt[:, None] * (v_low - e_low[:, None] * psi)
            - (v_mix - e_mix[:, None] * psi)
            + e_raise[:, None] * (v_mem - e_mem[:, None] * psi))


def _g_linear_np(psi, c0row, nf, z, kappa):
    v_mem = _apply_memory_np(psi, c0row, nf)
    v_low = _apply_lower_np(psi, kappa)
    return z[:, None] * v_low - _apply_raise_np(v_mem, kappa)


def _propagate_block_numpy(psi0, zb, uphase, kappa, gamma, Gamma, dt,
                           c0g, amat, bsrc, nonlinear, order1, stride_steps,
                           norm_cap, states, eld, drift, fail, fail_step):
    B, npts = zb.shape
    n_steps = npts - 1
    decay = np.exp(-gamma * dt)
    inject = 0.5 * Gamma * gamma * dt
    ground = np.zeros(6, dtype=complex)
    ground[0] = 1.0

    psi = np.tile(psi0, (B, 1))
    nf = np.zeros((B, 4), dtype=complex)
    mem = np.zeros(B, dtype=complex)
    alive = np.ones(B, dtype=bool)
    drift_acc = np.zeros(B)
    g = _g_nonlinear_np if nonlinear else _g_linear_np

    with np.errstate(all="ignore"):
        for k in range(n_steps + 1):
            n2 = np.einsum('bi,bi->b', psi.conj(), psi).real
            e_low = np.einsum('bi,bi->b', psi.conj(),
                              _apply_lower_np(psi, kappa)) / n2
            if k % stride_steps == 0:
                si = k // stride_steps
                states[:, si, :] = np.where(alive[:, None], psi, 0.0)
                eld[:, si] = np.where(alive, e_low.conj(), 0.0)
                drift[:, si] = np.where(alive, drift_acc, 0.0)
                drift_acc[:] = 0.0
            if k == n_steps or not alive.any():
                break
            z = zb[:, k]
            zt = z + mem if nonlinear else z
            c0row = c0g[k]
            nf_arg = nf if order1 else None
            g1 = g(psi, c0row, nf_arg, zt, kappa)
            pred = uphase * (psi + dt * g1)
            g2 = g(pred, c0row, nf_arg, zt, kappa)
            raw = uphase * (psi + 0.5 * dt * g1) + 0.5 * dt * g2
            nrm = np.sqrt(np.einsum('bi,bi->b', raw.conj(), raw).real)
            if nonlinear:
                bad = ~np.isfinite(nrm) | (nrm < MIN_NORM)
            else:
                bad = ~np.isfinite(nrm) | (nrm > norm_cap)
            newly = bad & alive
            if newly.any():
                fail[newly] = 1
                fail_step[newly] = k
                alive &= ~newly
            if nonlinear:
                step_drift = np.where(bad, 0.0, np.abs(nrm - 1.0))
                drift_acc = np.maximum(drift_acc, step_drift)
                psi = np.where(bad[:, None], psi, raw / np.where(bad, 1.0, nrm)[:, None])
            else:
                psi = np.where(bad[:, None], psi, raw)
            # park failed rows on the stationary ground state
            psi[~alive] = ground
            if order1:
                a0, a1, a2 = amat[2 * k], amat[2 * k + 1], amat[2 * k + 2]
                b0, b1, b2 = bsrc[2 * k], bsrc[2 * k + 1], bsrc[2 * k + 2]
                zt2 = zt[:, None]
                k1 = nf @ a0.T + b0 * zt2
                k2 = (nf + 0.5 * dt * k1) @ a1.T + b1 * zt2
                k3 = (nf + 0.5 * dt * k2) @ a1.T + b1 * zt2
                k4 = (nf + dt * k3) @ a2.T + b2 * zt2
                nf = nf + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
                nf[~alive] = 0.0
            if nonlinear:
                mem = mem * decay + inject * e_low.conj()
                mem[~alive] = 0.0


def propagate_block(params, psi0, z_block, tables, mode="nonlinear",
                    stride_steps=1, backend_name=None,
                    linear_norm_cap=LINEAR_NORM_CAP):
    """Propagate a block of trajectories sharing coefficient tables.

    ``z_block`` has shape (B, n_points).  Returns per-stride states
    (B, S, 6), raising-operator expectations (B, S), max pre-normalization
    norm drift per stride window (B, S), and per-trajectory failure flags and
    failing step indices (-1 when the trajectory completed).
    """
    use = backend.resolve_backend(backend_name)
    z_block = np.ascontiguousarray(z_block, dtype=complex)
    B, npts = z_block.shape
    n_steps = npts - 1
    if npts != params.n_points:
        raise ValueError("noise block length does not match the grid")
    n_strides = n_steps // stride_steps + 1
    uphase = np.exp(-1j * hamiltonian_diagonal(params) * params.dt)
    c0g = np.ascontiguousarray(tables.c0_grid)
    states = np.zeros((B, n_strides, 6), dtype=complex)
    eld = np.zeros((B, n_strides), dtype=complex)
    drift = np.zeros((B, n_strides))
    fail = np.zeros(B, dtype=np.int64)
    fail_step = np.full(B, -1, dtype=np.int64)
    args = (psi0.astype(complex), z_block, uphase, float(params.kappa),
            float(params.gamma), float(params.Gamma), float(params.dt),
            c0g, tables.nf_matrix, tables.nf_source,
            mode == "nonlinear", params.order == 1, int(stride_steps),
            float(linear_norm_cap), states, eld, drift, fail, fail_step)
    if use == "numba":
        _propagate_block_jit(*args)
    else:
        _propagate_block_numpy(*args)
    return states, eld, drift, fail, fail_step
