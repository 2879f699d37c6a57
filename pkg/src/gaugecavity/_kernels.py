"""Pointwise kernels used by the split-operator step.

Each grid point carries a small d x d matrix (d = 2 or 3). Matrices are stored
planar, shape (d, d, npts), so the numpy path works on contiguous rows.

The numba path is used when numba imports and GAUGECAVITY_NO_NUMBA is unset;
both paths are always importable for benchmarking and cross-checks.
"""
import os

import numpy as np

_FLAG = os.environ.get("GAUGECAVITY_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED

# |z| below which sinh(z)/z uses its Taylor series
_SINHC_SMALL = 1e-4


def apply_pointwise_numpy(u, psi):
    """psi[:, p] <- u[:, :, p] @ psi[:, p], in place. psi has shape (d, npts)."""
    d = psi.shape[0]
    if d == 2:
        a = u[0, 0] * psi[0] + u[0, 1] * psi[1]
        psi[1] = u[1, 0] * psi[0] + u[1, 1] * psi[1]
        psi[0] = a
        return psi
    out = np.zeros_like(psi)
    for i in range(d):
        for j in range(d):
            out[i] += u[i, j] * psi[j]
    psi[...] = out
    return psi


def _sinhc(z):
    small = np.abs(z) < _SINHC_SMALL
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z * z / 6.0, np.sinh(safe) / safe)


def expm2_numpy(m, scale):
    """exp(scale * m) for a planar stack of 2x2 matrices, shape (2, 2, npts).

    Uses m = a*I + b.sigma and exp(s b.sigma) = cosh(s q) I + s sinhc(s q) b.sigma,
    q^2 = b.b (no conjugation), in the (|1>, |2>) basis where sigma_z = diag(-1, 1).
    """
    a = 0.5 * (m[0, 0] + m[1, 1])
    bz = 0.5 * (m[1, 1] - m[0, 0])
    bx = 0.5 * (m[0, 1] + m[1, 0])
    by = (m[0, 1] - m[1, 0]) / 2j
    z = scale * np.sqrt(bx * bx + by * by + bz * bz)
    pref = np.exp(scale * a)
    c = pref * np.cosh(z)
    s = pref * scale * _sinhc(z)
    out = np.empty(m.shape, dtype=np.complex128)
    out[0, 0] = c - s * bz
    out[1, 1] = c + s * bz
    out[0, 1] = s * (bx + 1j * by)
    out[1, 0] = s * (bx - 1j * by)
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def apply_pointwise_numba(u, psi):
        d = psi.shape[0]
        npts = psi.shape[1]
        if d == 2:
            for p in range(npts):
                a, b = psi[0, p], psi[1, p]
                psi[0, p] = u[0, 0, p] * a + u[0, 1, p] * b
                psi[1, p] = u[1, 0, p] * a + u[1, 1, p] * b
            return psi
        if d == 3:
            for p in range(npts):
                a, b, c = psi[0, p], psi[1, p], psi[2, p]
                psi[0, p] = u[0, 0, p] * a + u[0, 1, p] * b + u[0, 2, p] * c
                psi[1, p] = u[1, 0, p] * a + u[1, 1, p] * b + u[1, 2, p] * c
                psi[2, p] = u[2, 0, p] * a + u[2, 1, p] * b + u[2, 2, p] * c
            return psi
        tmp = np.empty(d, dtype=np.complex128)
        for p in range(npts):
            for i in range(d):
                acc = 0j
                for j in range(d):
                    acc += u[i, j, p] * psi[j, p]
                tmp[i] = acc
            for i in range(d):
                psi[i, p] = tmp[i]
        return psi

    @njit(cache=True)
    def expm2_numba(m, scale):
        npts = m.shape[2]
        out = np.empty((2, 2, npts), dtype=np.complex128)
        for p in range(npts):
            a = 0.5 * (m[0, 0, p] + m[1, 1, p])
            bz = 0.5 * (m[1, 1, p] - m[0, 0, p])
            bx = 0.5 * (m[0, 1, p] + m[1, 0, p])
            by = (m[0, 1, p] - m[1, 0, p]) / 2j
            z = scale * np.sqrt(bx * bx + by * by + bz * bz)
            if abs(z) < _SINHC_SMALL:
                sh = 1.0 + z * z / 6.0
            else:
                sh = np.sinh(z) / z
            pref = np.exp(scale * a)
            c = pref * np.cosh(z)
            s = pref * scale * sh
            out[0, 0, p] = c - s * bz
            out[1, 1, p] = c + s * bz
            out[0, 1, p] = s * (bx + 1j * by)
            out[1, 0, p] = s * (bx - 1j * by)
        return out

else:  # pragma: no cover
    apply_pointwise_numba = None
    expm2_numba = None


def apply_pointwise(u, psi):
    if USE_NUMBA:
        return apply_pointwise_numba(u, psi)
    return apply_pointwise_numpy(u, psi)


def expm2(m, scale):
    m = np.ascontiguousarray(m, dtype=np.complex128)
    if USE_NUMBA:
        return expm2_numba(m, complex(scale))
    return expm2_numpy(m, complex(scale))


def backend():
    return "numba" if USE_NUMBA else "numpy"
