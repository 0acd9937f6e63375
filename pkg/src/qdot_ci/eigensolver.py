"""
Lowest eigenpairs of the sparse one-body Hamiltonian.

``partial_eigensolve`` is a thick-restart block Lanczos iteration with full
reorthogonalization. Each cycle grows an orthonormal block Krylov basis up to
a fixed size, does Rayleigh-Ritz on it, keeps the lowest Ritz vectors plus
the residual block and starts over. The block size lets degenerate levels
(up to the block size in multiplicity) converge as whole subspaces.

``dense_eigensolve`` diagonalizes the densified matrix and is the oracle the
iterative solver is checked against.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConvergenceError, ValidationError

logger = logging.getLogger(__name__)

DENSE_MAX_SITES = 20000
SPECTRUM_FRACTION = 0.01
DEGENERACY_GAP = 1e-9
DEFAULT_SEED = 7919


class SpectrumFractionWarning(UserWarning):
    """More than one percent of the spectrum was requested from the partial solver."""


@dataclass(frozen=True, eq=False)
class SingleParticleSpectrum:
    eigenvalues: np.ndarray  # (m,), ascending, eV
    eigenvectors: np.ndarray  # (N, m), orthonormal columns
    residual_norms: np.ndarray  # (m,)
    iterations: int = 0

    @property
    def num_states(self):
        return self.eigenvalues.shape[0]

    @property
    def num_sites(self):
        return self.eigenvectors.shape[0]

    def truncated(self, m):
        return SingleParticleSpectrum(
            self.eigenvalues[:m], self.eigenvectors[:, :m], self.residual_norms[:m], self.iterations
        )


def _operator(H):
    matrix = getattr(H, "matrix", H)
    return matrix, matrix.shape[0]


def residual_norms(H, eigenvalues, eigenvectors):
    matrix, _ = _operator(H)
    R = matrix @ eigenvectors - eigenvectors * eigenvalues
    return np.linalg.norm(R, axis=0)


def _polish_degenerate_blocks(matrix, values, vectors, gap=DEGENERACY_GAP):
    """Re-orthonormalize clusters of near-equal eigenvalues as a block."""
    start = 0
    m = values.shape[0]
    while start < m:
        stop = start + 1
        while stop < m and values[stop] - values[stop - 1] < gap:
            stop += 1
        if stop - start > 1:
            Q, _ = np.linalg.qr(vectors[:, start:stop])
            T = Q.T @ (matrix @ Q)
            theta, S = np.linalg.eigh(0.5 * (T + T.T))
            vectors[:, start:stop] = Q @ S
            values[start:stop] = theta
        start = stop
    return values, vectors


def _orthonormal_block(V, Z, rng, scale):
    """Orthonormalize ``Z`` against the columns of ``V`` and within itself.

    Directions that vanish under projection are replaced by random vectors so
    the block keeps full rank. Returns ``None`` when ``V`` already spans the
    whole space.
    """
    n = Z.shape[0]
    k = 0 if V is None else V.shape[1]
    width = min(Z.shape[1], n - k)
    if width <= 0:
        return None
    Z = Z[:, :width].copy()
    floor = 1e-10 * max(scale, 1.0)
    cols = []
    for j in range(width):
        z = Z[:, j]
        for attempt in range(4):
            for _ in range(2):
                if k:
                    z = z - V @ (V.T @ z)
                for q in cols:
                    z = z - q * (q @ z)
            norm = np.linalg.norm(z)
            if norm > floor:
                break
            z = rng.standard_normal(n)
            floor = 1e-10
        else:  # pragma: no cover - needs pathological rounding
            raise ConvergenceError("could not extend Krylov basis")
        cols.append(z / norm)
    return np.stack(cols, axis=1)


def partial_eigensolve(H, m, tol=1e-9, max_iterations=300, block_size=None, basis_size=None, seed=DEFAULT_SEED):
    """Return the ``m`` algebraically smallest eigenpairs of ``H``.

    Parameters
    ----------
    H : SparseHamiltonian or scipy sparse matrix
    m : int
        Number of eigenpairs, ``1 <= m <= N``.
    tol : float
        Absolute bound (eV) on every residual ``||H v - lambda v||``.
    max_iterations : int
        Restart cycles before giving up with :class:`ConvergenceError`.
    block_size, basis_size : int, optional
        Lanczos block width and the basis size at which a cycle restarts.
    seed : int
        Seed of the starting block; fixed so runs are reproducible.
    """
    matrix, n = _operator(H)
    if int(m) != m or m < 1:
        raise ValidationError("eigensolver", "m", f"must be a positive integer, got {m}")
    if m > n:
        raise ValidationError("eigensolver", "m", f"m={m} exceeds matrix dimension {n}")
    if not tol > 0:
        raise ValidationError("eigensolver", "tol", f"must be > 0, got {tol}")
    if m > SPECTRUM_FRACTION * n:
        warnings.warn(
            f"requested {m} of {n} eigenpairs (more than {SPECTRUM_FRACTION:.0%} of the spectrum)",
            SpectrumFractionWarning,
            stacklevel=2,
        )

    b = block_size or min(6, m)
    b = max(1, min(b, n))
    kmax = basis_size or max(2 * m + 2 * b, m + 4 * b, 24)
    kmax = min(kmax, n)
    keep = min(m + b, max(kmax - b, m))

    rng = np.random.default_rng(seed)
    scale = float(abs(matrix).sum(axis=1).max()) if n else 1.0

    V = _orthonormal_block(None, rng.standard_normal((n, b)), rng, scale)
    W = matrix @ V
    last = slice(0, V.shape[1])
    worst = np.inf

    for cycle in range(1, max_iterations + 1):
        while V.shape[1] < kmax:
            Z = _orthonormal_block(V, W[:, last], rng, scale)
            if Z is None:
                break
            Z = Z[:, : kmax - V.shape[1]]
            first = V.shape[1]
            V = np.concatenate([V, Z], axis=1)
            W = np.concatenate([W, matrix @ Z], axis=1)
            last = slice(first, V.shape[1])

        T = V.T @ W
        theta, S = np.linalg.eigh(0.5 * (T + T.T))
        Y = V @ S[:, :keep]
        WY = W @ S[:, :keep]
        R = WY - Y * theta[:keep]
        res = np.linalg.norm(R, axis=0)
        worst = float(res[:m].max())
        logger.debug("lanczos cycle %d: basis %d, worst residual %.3e", cycle, V.shape[1], worst)

        if worst <= tol or V.shape[1] == n:
            values = theta[:m].copy()
            vectors = Y[:, :m].copy()
            values, vectors = _polish_degenerate_blocks(matrix, values, vectors)
            final = residual_norms(matrix, values, vectors)
            return SingleParticleSpectrum(values, vectors, final, cycle)

        # thick restart: lowest Ritz vectors plus the residual directions of
        # the lowest unconverged ones
        pending = np.flatnonzero(res > tol)[:b]
        V, W = Y, WY
        Z = _orthonormal_block(V, R[:, pending], rng, scale)
        if Z is not None:
            first = V.shape[1]
            V = np.concatenate([V, Z], axis=1)
            W = np.concatenate([W, matrix @ Z], axis=1)
            last = slice(first, V.shape[1])
        else:
            last = slice(0, V.shape[1])

    raise ConvergenceError(
        f"partial eigensolve did not converge in {max_iterations} cycles (worst residual {worst:.3e} eV)",
        worst_residual=worst,
    )


def dense_eigensolve(H):
    """All eigenpairs by dense diagonalization (oracle for the partial solver)."""
    matrix, n = _operator(H)
    if n > DENSE_MAX_SITES:
        raise CapacityError(
            f"dense diagonalization of N={n} exceeds the {DENSE_MAX_SITES}-site guard; use partial_eigensolve"
        )
    dense = matrix.toarray() if hasattr(matrix, "toarray") else np.asarray(matrix, dtype=float)
    values, vectors = np.linalg.eigh(dense)
    return SingleParticleSpectrum(values, vectors, residual_norms(matrix, values, vectors), 0)


def lowest_eigenpairs(H, m, tol=1e-9, max_iterations=300, force_dense=False):
    """Dispatch to the dense or partial solver; the result holds ``m`` states."""
    if force_dense:
        _, n = _operator(H)
        if m > n:
            raise ValidationError("eigensolver", "m", f"m={m} exceeds matrix dimension {n}")
        return dense_eigensolve(H).truncated(m)
    return partial_eigensolve(H, m, tol=tol, max_iterations=max_iterations)
