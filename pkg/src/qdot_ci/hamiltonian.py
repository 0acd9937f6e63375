"""
One-body tight-binding Hamiltonian with a two-well gate potential.

The gate is two harmonic wells capped at zero; overlapping wells combine by
pointwise minimum, so each well keeps its own depth and the detuning is
literally ``depth_a - depth_b``.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError

HBAR_C_EV_NM = 197.327
ELECTRON_MASS_EV = 511000.0
GAAS_EFFECTIVE_MASS = 0.067


def effective_mass_hopping(spacing_nm, mass_ratio=GAAS_EFFECTIVE_MASS):
    """Hopping ``-hbar^2 / (2 m* a^2)`` in eV for a lattice of spacing ``a``.

    >>> round(effective_mass_hopping(1.0), 5)
    -0.56865
    """
    return -(HBAR_C_EV_NM**2) / (2.0 * mass_ratio * ELECTRON_MASS_EV * spacing_nm**2)


@dataclass(frozen=True)
class TightBindingParams:
    hopping_eV: float
    onsite_eV: float = 0.0

    def __post_init__(self):
        if self.hopping_eV == 0:
            raise ValidationError("hamiltonian", "hopping_eV", "must be nonzero")

    @classmethod
    def effective_mass(cls, spacing_nm, coordination, mass_ratio=GAAS_EFFECTIVE_MASS):
        """Calibrated parameters with the band bottom at 0 eV (onsite = z|t|)."""
        t = effective_mass_hopping(spacing_nm, mass_ratio)
        return cls(hopping_eV=t, onsite_eV=coordination * abs(t))


@dataclass(frozen=True)
class TwoWellPotential:
    center_a: tuple
    center_b: tuple
    curvature_eV_per_nm2: float
    depth_a_eV: float = 0.0
    depth_b_eV: float = 0.0

    def __post_init__(self):
        for name in ("center_a", "center_b"):
            c = np.asarray(getattr(self, name), dtype=float)
            if c.shape != (3,) or not np.all(np.isfinite(c)):
                raise ValidationError("hamiltonian", name, "must be a finite 3-vector in nm")
            object.__setattr__(self, name, tuple(float(x) for x in c))
        if not self.curvature_eV_per_nm2 > 0:
            raise ValidationError("hamiltonian", "curvature_eV_per_nm2", "must be > 0")
        for name in ("depth_a_eV", "depth_b_eV"):
            if not getattr(self, name) >= 0:
                raise ValidationError("hamiltonian", name, f"must be >= 0, got {getattr(self, name)}")

    @property
    def detuning_eV(self):
        return self.depth_a_eV - self.depth_b_eV

    def with_depths(self, depth_a, depth_b):
        return replace(self, depth_a_eV=depth_a, depth_b_eV=depth_b)

    @classmethod
    def flat(cls):
        """Both wells switched off (V = 0 everywhere)."""
        return cls((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 1.0, 0.0, 0.0)


def evaluate_potential(wells, position):
    """Gate potential in eV at one position or an (n, 3) array of positions."""
    r = np.asarray(position, dtype=float)
    ca = np.asarray(wells.center_a)
    cb = np.asarray(wells.center_b)
    half_k = 0.5 * wells.curvature_eV_per_nm2
    va = -wells.depth_a_eV + half_k * np.sum((r - ca) ** 2, axis=-1)
    vb = -wells.depth_b_eV + half_k * np.sum((r - cb) ** 2, axis=-1)
    v = np.minimum(np.minimum(va, vb), 0.0)
    if v.ndim == 0:
        return float(v)
    return v


@dataclass(frozen=True, eq=False)
class SparseHamiltonian:
    """Real symmetric one-body Hamiltonian (eV) in CSR form."""

    matrix: sp.csr_matrix
    potential: np.ndarray

    @property
    def dimension(self):
        return self.matrix.shape[0]

    @property
    def diagonal(self):
        return self.matrix.diagonal()

    def matvec(self, x):
        return self.matrix @ x

    def toarray(self):
        return self.matrix.toarray()


def load_potential_file(path, num_sites):
    """Per-site potential override: one eV value per line, site-index order."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ValidationError(
                    "hamiltonian", "potential_file", f"{path}:{lineno}: not a number: {text!r}"
                ) from None
    if len(values) != num_sites:
        raise ValidationError(
            "hamiltonian", "potential_file", f"expected {num_sites} values, found {len(values)}"
        )
    return np.asarray(values)


def assemble_hamiltonian(lattice, tb, wells=None, potential=None):
    """Build ``H[i, i] = onsite + V(r_i)`` and ``H[i, j] = t`` on neighbor pairs.

    ``potential`` (per-site values in eV) overrides ``wells`` when given.
    """
    n = lattice.num_sites
    if potential is not None:
        v = np.asarray(potential, dtype=float)
        if v.shape != (n,):
            raise ValidationError("hamiltonian", "potential", f"expected {n} values, got shape {v.shape}")
    elif wells is not None:
        v = evaluate_potential(wells, lattice.positions)
    else:
        v = np.zeros(n)

    pairs = lattice.neighbor_pairs
    npair = pairs.shape[0]
    rows = np.concatenate([np.arange(n), pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([np.arange(n), pairs[:, 1], pairs[:, 0]])
    data = np.concatenate([tb.onsite_eV + v, np.full(2 * npair, float(tb.hopping_eV))])
    coo = sp.coo_matrix((data, (rows, cols)), shape=(n, n))
    matrix = coo.tocsr()
    matrix.sort_indices()
    v = np.array(v, copy=True)
    v.setflags(write=False)
    return SparseHamiltonian(matrix=matrix, potential=v)
