"""
Two-electron configuration interaction over tight-binding orbitals.

Spin-orbitals are labelled ``2 * orbital + spin`` (spin 0 = up, 1 = down),
which makes the integer order the same as (orbital, spin) lexicographic
order. A determinant is an ascending pair of distinct spin-orbitals.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import ValidationError

logger = logging.getLogger(__name__)

UP = 0
DOWN = 1

COULOMB_EV_NM = 1.439964  # e^2 / (4 pi eps0)
MAX_CI_ORBITALS = 32
SPIN_DEGENERACY_GAP = 1e-8
_PAIR_CHUNK = 8


class SpinOrbital(NamedTuple):
    orbital: int
    spin: int

    @property
    def index(self):
        return 2 * self.orbital + self.spin

    @classmethod
    def from_index(cls, index):
        return cls(int(index) >> 1, int(index) & 1)

    def __str__(self):
        return f"{self.orbital}{'↑' if self.spin == UP else '↓'}"


@dataclass(frozen=True, order=True)
class Determinant:
    """Two occupied spin-orbitals in canonical (ascending) order."""

    first: SpinOrbital
    second: SpinOrbital

    def __post_init__(self):
        for so in (self.first, self.second):
            if so.spin not in (UP, DOWN) or so.orbital < 0:
                raise ValidationError("ci", "determinant", f"invalid spin-orbital {so!r}")
        if not self.first.index < self.second.index:
            raise ValidationError(
                "ci", "determinant", f"spin-orbitals must be distinct and ascending, got {self.first}, {self.second}"
            )

    @classmethod
    def canonical(cls, a, b):
        """Return ``(determinant, sign)`` with ``|a b> = sign * |determinant>``."""
        a, b = _as_spin_orbital(a), _as_spin_orbital(b)
        if a.index == b.index:
            raise ValidationError("ci", "determinant", f"spin-orbital {a} occupied twice")
        if a.index < b.index:
            return cls(a, b), 1
        return cls(b, a), -1

    @property
    def indices(self):
        return (self.first.index, self.second.index)

    def __str__(self):
        return f"{{{self.first}, {self.second}}}"


def _as_spin_orbital(x):
    if isinstance(x, SpinOrbital):
        return x
    if isinstance(x, (int, np.integer)):
        return SpinOrbital.from_index(x)
    return SpinOrbital(int(x[0]), int(x[1]))


@dataclass(frozen=True, eq=False)
class DeterminantBasis:
    num_orbitals: int
    determinants: tuple
    indices: np.ndarray  # (D, 2) spin-orbital indices

    def __len__(self):
        return len(self.determinants)

    def __getitem__(self, item):
        return self.determinants[item]

    def position(self, det):
        a, b = det.indices
        n = 2 * self.num_orbitals
        # rank of the pair (a, b) among 2-combinations of range(n) in lexicographic order
        return a * n - a * (a + 1) // 2 + (b - a - 1)


def build_determinant_basis(M):
    if int(M) != M or M < 1:
        raise ValidationError("ci", "num_orbitals", f"must be >= 1, got {M}")
    M = int(M)
    pairs = list(combinations(range(2 * M), 2))
    dets = tuple(Determinant(SpinOrbital.from_index(a), SpinOrbital.from_index(b)) for a, b in pairs)
    indices = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    indices.setflags(write=False)
    return DeterminantBasis(M, dets, indices)


@dataclass(frozen=True)
class CoulombParams:
    """On-site Hubbard energy plus a ``1/(epsilon_r r)`` tail.

    ``epsilon_r = inf`` switches the tail off (on-site-only kernel).
    """

    onsite_U_eV: float
    epsilon_r: float = 1.0

    def __post_init__(self):
        if not self.onsite_U_eV >= 0:
            raise ValidationError("ci", "onsite_U_eV", f"must be >= 0, got {self.onsite_U_eV}")
        if not self.epsilon_r >= 1:
            raise ValidationError("ci", "epsilon_r", f"must be >= 1, got {self.epsilon_r}")

    @property
    def tail_scale(self):
        """Prefactor of ``1/r`` in eV nm."""
        if np.isinf(self.epsilon_r):
            return 0.0
        return COULOMB_EV_NM / self.epsilon_r


def cube_averaged_onsite_u(spacing_nm, epsilon_r):
    """Mean of the screened ``1/r`` over a cell of side ``spacing_nm`` (eV).

    Useful default for the on-site energy: it is the value the ``1/r`` tail
    would give if each site's charge were spread uniformly over its cube.
    """
    # <1/|r|> over the unit cube centred at the origin
    mean_inverse_distance = 2.3800772
    return COULOMB_EV_NM * mean_inverse_distance / (epsilon_r * spacing_nm)


@dataclass(frozen=True, eq=False)
class IntegralTable:
    one_body: np.ndarray  # (M,) orbital energies, eV
    two_body: np.ndarray  # (M, M, M, M) <ij|kl>, eV

    @property
    def num_orbitals(self):
        return self.one_body.shape[0]

    def shifted(self, c):
        return IntegralTable(self.one_body + c, self.two_body)


def _pair_index(M):
    """Map unordered orbital pairs (i <= k) to columns; returns (pairs, lookup)."""
    pairs = [(i, k) for i in range(M) for k in range(i, M)]
    lookup = np.empty((M, M), dtype=np.int64)
    for n, (i, k) in enumerate(pairs):
        lookup[i, k] = lookup[k, i] = n
    return np.array(pairs, dtype=np.int64).reshape(-1, 2), lookup


def compute_integrals(spectrum, lattice, params, M, threads=1):
    """One- and two-particle integrals over the lowest ``M`` orbitals.

    ``two_body[i, j, k, l] = sum_ab phi_i(a) phi_j(b) w(a, b) phi_k(a) phi_l(b)``,
    evaluated as pair densities ``rho_ik``, kernel images ``W_jl = w rho_jl``
    and overlaps ``rho_ik . W_jl``. The kernel applications run in fixed-size
    chunks over the pair list, one chunk per task, so results do not depend on
    ``threads``.
    """
    if int(M) != M or M < 1:
        raise ValidationError("ci", "num_orbitals", f"must be >= 1, got {M}")
    if M > spectrum.num_states:
        raise ValidationError("ci", "num_orbitals", f"M={M} exceeds the {spectrum.num_states} available orbitals")
    if M > MAX_CI_ORBITALS:
        raise ValidationError("ci", "num_orbitals", f"M={M} exceeds the {MAX_CI_ORBITALS}-orbital guard")
    if spectrum.num_sites != lattice.num_sites:
        raise ValidationError(
            "ci", "spectrum", f"orbitals have {spectrum.num_sites} sites, lattice has {lattice.num_sites}"
        )
    M = int(M)
    phi = np.ascontiguousarray(spectrum.eigenvectors[:, :M])
    pairs, lookup = _pair_index(M)
    rho = np.ascontiguousarray(phi[:, pairs[:, 0]] * phi[:, pairs[:, 1]])

    chunks = [slice(s, min(s + _PAIR_CHUNK, rho.shape[1])) for s in range(0, rho.shape[1], _PAIR_CHUNK)]
    onsite, scale = params.onsite_U_eV, params.tail_scale

    def apply(chunk):
        return kernels.coulomb_apply(lattice.positions, rho[:, chunk], onsite, scale)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            images = list(pool.map(apply, chunks))
    else:
        images = [apply(c) for c in chunks]
    W = np.concatenate(images, axis=1)

    G = rho.T @ W
    G = 0.5 * (G + G.T)
    # two_body[i, j, k, l] = G[pair(i, k), pair(j, l)]
    two_body = np.ascontiguousarray(G[lookup[:, None, :, None], lookup[None, :, None, :]])
    one_body = np.array(spectrum.eigenvalues[:M], dtype=float)
    return IntegralTable(one_body, two_body)


def _spin_orbital_integral(table, P, Q, R, S):
    """<PQ|RS> over spin-orbitals: spatial integral times spin deltas."""
    if (P & 1) != (R & 1) or (Q & 1) != (S & 1):
        return 0.0
    return float(table.two_body[P >> 1, Q >> 1, R >> 1, S >> 1])


def _ordered(det):
    if isinstance(det, Determinant):
        return det.indices
    a, b = (_as_spin_orbital(x).index for x in det)
    if a == b:
        raise ValidationError("ci", "determinant", "spin-orbital occupied twice")
    return a, b


def slater_condon_element(A, B, table):
    """<A|H|B> for two-electron determinants by the Slater-Condon rules.

    ``A`` and ``B`` are :class:`Determinant` objects or ordered pairs of
    spin-orbitals; for ordered pairs the element follows the given order, so
    swapping the two entries of one argument flips the sign.
    """
    a = _ordered(A)
    b = _ordered(B)
    lam = table.one_body
    common = set(a) & set(b)

    if len(common) == 2:
        sign = 1.0 if a == b else -1.0
        P, Q = a
        value = (
            lam[P >> 1]
            + lam[Q >> 1]
            + _spin_orbital_integral(table, P, Q, P, Q)
            - _spin_orbital_integral(table, P, Q, Q, P)
        )
        return sign * value

    if len(common) == 1:
        (c,) = common
        # move the shared spin-orbital to the second slot of both determinants
        sign = 1.0
        if a[1] == c:
            m = a[0]
        else:
            m, sign = a[1], -sign
        if b[1] == c:
            r = b[0]
        else:
            r, sign = b[1], -sign
        value = _spin_orbital_integral(table, m, c, r, c) - _spin_orbital_integral(table, m, c, c, r)
        return sign * value

    P, Q = a
    R, S = b
    return _spin_orbital_integral(table, P, Q, R, S) - _spin_orbital_integral(table, P, Q, S, R)


def build_ci_matrix(basis, table):
    if table.num_orbitals < basis.num_orbitals:
        raise ValidationError(
            "ci", "table", f"integrals cover {table.num_orbitals} orbitals, basis needs {basis.num_orbitals}"
        )
    M = basis.num_orbitals
    one_body = np.ascontiguousarray(table.one_body[:M])
    two_body = np.ascontiguousarray(table.two_body[:M, :M, :M, :M])
    return kernels.ci_matrix(basis.indices, one_body, two_body)


def spin_raising_matrix(basis):
    """S+ = sum_p a+_{p up} a_{p down} as a sparse matrix on the determinant basis."""
    rows, cols, vals = [], [], []
    for J, det in enumerate(basis.determinants):
        occ = det.indices
        for slot, Y in enumerate(occ):
            if Y & 1 != DOWN:
                continue
            X = Y - 1
            other = occ[1 - slot]
            if X == other:
                continue
            # a_Y |occ> = (-1)^slot |other>;  a+_X |other> = |X other>
            new, sign = Determinant.canonical(X, other)
            rows.append(basis.position(new))
            cols.append(J)
            vals.append(float((-1) ** slot * sign))
    D = len(basis)
    return sp.csr_matrix((vals, (rows, cols)), shape=(D, D))


def spin_squared_matrix(basis):
    """S^2 = S- S+ + Sz^2 + Sz in units of hbar^2."""
    splus = spin_raising_matrix(basis)
    idx = basis.indices
    sz = 0.5 * ((1 - 2 * (idx[:, 0] & 1)) + (1 - 2 * (idx[:, 1] & 1)))
    return (splus.T @ splus + sp.diags(sz * sz + sz)).tocsr()


def spin_squared(state, basis, operator=None):
    """<S^2> = S(S+1) of a normalized CI vector."""
    v = np.asarray(state, dtype=float)
    if v.shape != (len(basis),):
        raise ValidationError("ci", "state", f"expected length {len(basis)}, got shape {v.shape}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-8:
        raise ValidationError("ci", "state", f"state must be normalized, |v| = {norm:.12g}")
    S2 = spin_squared_matrix(basis) if operator is None else operator
    return float(v @ (S2 @ v))


@dataclass(frozen=True, eq=False)
class ManyBodySpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (D, D), columns
    spin_squared: np.ndarray

    @property
    def singlets(self):
        return np.flatnonzero(np.abs(self.spin_squared) < 0.5)

    @property
    def triplets(self):
        return np.flatnonzero(np.abs(self.spin_squared - 2.0) < 0.5)

    @property
    def ground_energy(self):
        return float(self.eigenvalues[0])

    @property
    def exchange_splitting(self):
        """E(lowest triplet) - E(lowest singlet); nan when either is absent."""
        s, t = self.singlets, self.triplets
        if len(s) == 0 or len(t) == 0:
            return float("nan")
        return float(self.eigenvalues[t[0]] - self.eigenvalues[s[0]])


def _resolve_spin(values, vectors, S2, gap=SPIN_DEGENERACY_GAP):
    """Within each cluster of degenerate levels, rotate onto S^2 eigenvectors."""
    D = values.shape[0]
    start = 0
    while start < D:
        stop = start + 1
        while stop < D and values[stop] - values[stop - 1] < gap:
            stop += 1
        if stop - start > 1:
            block = vectors[:, start:stop]
            s2 = block.T @ (S2 @ block)
            _, U = np.linalg.eigh(0.5 * (s2 + s2.T))
            vectors[:, start:stop] = block @ U
        start = stop
    return vectors


def diagonalize_ci(basis, table):
    """Dense diagonalization of the CI matrix, with S(S+1) for every state."""
    H = build_ci_matrix(basis, table)
    if H.shape != (len(basis), len(basis)):  # pragma: no cover - kernel contract
        raise ValidationError("ci", "matrix", f"shape {H.shape} does not match basis size {len(basis)}")
    values, vectors = np.linalg.eigh(H)
    S2 = spin_squared_matrix(basis)
    vectors = _resolve_spin(values, vectors, S2)
    s2 = np.einsum("ij,ij->j", vectors, S2 @ vectors)
    return ManyBodySpectrum(values, vectors, s2)


def pair_amplitude(state, basis, orbitals):
    """Two-particle amplitude Psi[a, s, b, t] over sites and spins.

    ``orbitals`` is the (N, M) orbital matrix the basis refers to. The result
    is antisymmetric under (a, s) <-> (b, t) and normalized so that the sum of
    ``|Psi|^2`` is one.
    """
    M = basis.num_orbitals
    C = np.zeros((2 * M, 2 * M))
    idx = basis.indices
    c = np.asarray(state, dtype=float) / np.sqrt(2.0)
    C[idx[:, 0], idx[:, 1]] = c
    C[idx[:, 1], idx[:, 0]] = -c
    C = C.reshape(M, 2, M, 2)
    phi = orbitals[:, :M]
    return np.einsum("ap,psqt,bq->asbt", phi, C, phi, optimize=True)


def site_density(state, basis, orbitals):
    """Electron density per site (sums to 2)."""
    psi = pair_amplitude(state, basis, orbitals)
    return 2.0 * np.einsum("asbt,asbt->a", psi, psi)
