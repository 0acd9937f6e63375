"""
Hot numeric kernels.

Each kernel has a numba-compiled variant and a pure-numpy variant with the
same signature. The public names (``coulomb_apply``, ``ci_matrix``) are bound
at import time: numba when it is importable and the environment variable
``QDOT_CI_DISABLE_NUMBA`` is unset (or ``0``), numpy otherwise.

Both variants are deterministic for a given input; they agree with each other
to rounding, not bitwise.
"""

import os

import numpy as np

DISABLE_ENV = "QDOT_CI_DISABLE_NUMBA"

_ROW_CHUNK = 256


def _numba_requested():
    return os.environ.get(DISABLE_ENV, "0").strip().lower() in ("", "0", "false", "no")


try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


# --------------------------------------------------------------------------
# Coulomb kernel application: out[a, p] = sum_b w(a, b) rho[b, p]
# --------------------------------------------------------------------------

def coulomb_apply_numpy(positions, rho, onsite_u, scale):
    """Apply the lattice interaction kernel to a stack of pair densities.

    ``w(a, a) = onsite_u`` and ``w(a, b) = scale / |r_a - r_b|`` otherwise.
    ``rho`` has shape (N, P); the result has the same shape.
    """
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    out = onsite_u * rho
    if scale == 0.0:
        return out
    n = positions.shape[0]
    for start in range(0, n, _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, n)
        diff = positions[start:stop, None, :] - positions[None, :, :]
        dist = np.sqrt(np.einsum("abk,abk->ab", diff, diff))
        rows = np.arange(stop - start)
        dist[rows, rows + start] = np.inf
        out[start:stop] += (scale / dist) @ rho
    return out


def _coulomb_apply_loops(positions, rho, onsite_u, scale):
    n = positions.shape[0]
    npair = rho.shape[1]
    out = np.empty((n, npair))
    acc = np.empty(npair)
    for a in range(n):
        for p in range(npair):
            acc[p] = 0.0
        if scale != 0.0:
            xa = positions[a, 0]
            ya = positions[a, 1]
            za = positions[a, 2]
            for b in range(n):
                if b == a:
                    continue
                dx = xa - positions[b, 0]
                dy = ya - positions[b, 1]
                dz = za - positions[b, 2]
                w = scale / np.sqrt(dx * dx + dy * dy + dz * dz)
                for p in range(npair):
                    acc[p] += w * rho[b, p]
        for p in range(npair):
            out[a, p] = onsite_u * rho[a, p] + acc[p]
    return out


# --------------------------------------------------------------------------
# Two-electron CI matrix over canonical determinants
# --------------------------------------------------------------------------

def ci_matrix_numpy(dets, one_body, two_body):
    """Assemble the two-electron CI matrix.

    ``dets`` is a (D, 2) integer array of spin-orbital indices ``2*p + s``
    with the first index strictly smaller than the second. ``one_body`` holds
    the (diagonal) orbital energies and ``two_body[i, j, k, l]`` the spatial
    integrals <ij|kl>.
    """
    dets = np.asarray(dets, dtype=np.int64)
    P = dets[:, 0][:, None]
    Q = dets[:, 1][:, None]
    R = dets[:, 0][None, :]
    S = dets[:, 1][None, :]
    p, sp = P >> 1, P & 1
    q, sq = Q >> 1, Q & 1
    r, sr = R >> 1, R & 1
    s, ss = S >> 1, S & 1
    direct = np.where((sp == sr) & (sq == ss), two_body[p, q, r, s], 0.0)
    exchange = np.where((sp == ss) & (sq == sr), two_body[p, q, s, r], 0.0)
    H = direct - exchange
    # exact symmetry even if the table is only symmetric to rounding
    H = 0.5 * (H + H.T)
    d = np.arange(dets.shape[0])
    H[d, d] += one_body[dets[:, 0] >> 1] + one_body[dets[:, 1] >> 1]
    return H


def _ci_matrix_loops(dets, one_body, two_body):
    D = dets.shape[0]
    H = np.empty((D, D))
    for I in range(D):
        P = dets[I, 0]
        Q = dets[I, 1]
        p, sp = P >> 1, P & 1
        q, sq = Q >> 1, Q & 1
        for J in range(D):
            R = dets[J, 0]
            S = dets[J, 1]
            r, sr = R >> 1, R & 1
            s, ss = S >> 1, S & 1
            direct = 0.0
            exchange = 0.0
            if sp == sr and sq == ss:
                direct = two_body[p, q, r, s]
            if sp == ss and sq == sr:
                exchange = two_body[p, q, s, r]
            H[I, J] = direct - exchange
    for I in range(D):
        for J in range(I + 1, D):
            v = 0.5 * (H[I, J] + H[J, I])
            H[I, J] = v
            H[J, I] = v
        H[I, I] += one_body[dets[I, 0] >> 1] + one_body[dets[I, 1] >> 1]
    return H


if HAVE_NUMBA:
    _coulomb_apply_jit = njit(cache=True, nogil=True)(_coulomb_apply_loops)
    _ci_matrix_jit = njit(cache=True, nogil=True)(_ci_matrix_loops)


def coulomb_apply_numba(positions, rho, onsite_u, scale):
    """numba variant of :func:`coulomb_apply_numpy`."""
    return _coulomb_apply_jit(
        np.ascontiguousarray(positions, dtype=np.float64),
        np.ascontiguousarray(rho, dtype=np.float64),
        float(onsite_u),
        float(scale),
    )


def ci_matrix_numba(dets, one_body, two_body):
    """numba variant of :func:`ci_matrix_numpy`."""
    return _ci_matrix_jit(
        np.ascontiguousarray(dets, dtype=np.int64),
        np.ascontiguousarray(one_body, dtype=np.float64),
        np.ascontiguousarray(two_body, dtype=np.float64),
    )


USE_NUMBA = HAVE_NUMBA and _numba_requested()

if USE_NUMBA:
    coulomb_apply = coulomb_apply_numba
    ci_matrix = ci_matrix_numba
    BACKEND = "numba"
else:
    coulomb_apply = coulomb_apply_numpy
    ci_matrix = ci_matrix_numpy
    BACKEND = "numpy"

__all__ = [
    "BACKEND",
    "DISABLE_ENV",
    "HAVE_NUMBA",
    "USE_NUMBA",
    "ci_matrix",
    "ci_matrix_numba",
    "ci_matrix_numpy",
    "coulomb_apply",
    "coulomb_apply_numba",
    "coulomb_apply_numpy",
]
