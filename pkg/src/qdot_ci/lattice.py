"""Finite simple-cubic lattices with open boundaries."""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class LatticeSpec:
    dims: tuple
    spacing: float  # nm

    def __post_init__(self):
        dims = tuple(self.dims)
        if len(dims) != 3:
            raise ValidationError("lattice", "dims", f"expected 3 entries, got {len(dims)}")
        for axis, n in zip("xyz", dims):
            if int(n) != n or n < 1:
                raise ValidationError("lattice", "dims", f"n{axis}={n} must be an integer >= 1")
        object.__setattr__(self, "dims", tuple(int(n) for n in dims))
        if not self.spacing > 0:
            raise ValidationError("lattice", "spacing", f"must be > 0, got {self.spacing}")

    @property
    def num_sites(self):
        nx, ny, nz = self.dims
        return nx * ny * nz


@dataclass(frozen=True, eq=False)
class Lattice:
    """Site positions (nm), axis-adjacent neighbor pairs ``i < j`` and spacing.

    Sites are indexed ``ix + nx * (iy + ny * iz)``.
    """

    dims: tuple
    spacing: float
    positions: np.ndarray
    neighbor_pairs: np.ndarray

    @property
    def num_sites(self):
        return self.positions.shape[0]

    @property
    def num_pairs(self):
        return self.neighbor_pairs.shape[0]

    @property
    def coordination(self):
        """Largest number of neighbors of any site."""
        if self.num_pairs == 0:
            return 0
        counts = np.bincount(self.neighbor_pairs.ravel(), minlength=self.num_sites)
        return int(counts.max())

    @property
    def center(self):
        return 0.5 * (self.positions.min(axis=0) + self.positions.max(axis=0))

    def site_index(self, ix, iy=0, iz=0):
        nx, ny, _ = self.dims
        return ix + nx * (iy + ny * iz)

    def mirror_permutation(self, axis=0):
        """Index map of the reflection ``i_axis -> n_axis - 1 - i_axis``."""
        nx, ny, nz = self.dims
        grid = np.arange(self.num_sites).reshape(nz, ny, nx)
        flip_axis = {0: 2, 1: 1, 2: 0}[axis]
        return np.flip(grid, axis=flip_axis).ravel().copy()


def expected_pair_count(dims):
    nx, ny, nz = dims
    return (nx - 1) * ny * nz + nx * (ny - 1) * nz + nx * ny * (nz - 1)


def build_lattice(spec):
    if not isinstance(spec, LatticeSpec):
        spec = LatticeSpec(*spec)
    nx, ny, nz = spec.dims
    index = np.arange(spec.num_sites).reshape(nz, ny, nx)
    iz, iy, ix = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    positions = spec.spacing * np.stack([ix.ravel(), iy.ravel(), iz.ravel()], axis=1).astype(float)

    pairs = [
        np.stack([index[:, :, :-1].ravel(), index[:, :, 1:].ravel()], axis=1),
        np.stack([index[:, :-1, :].ravel(), index[:, 1:, :].ravel()], axis=1),
        np.stack([index[:-1, :, :].ravel(), index[1:, :, :].ravel()], axis=1),
    ]
    pairs = np.concatenate(pairs, axis=0).astype(np.int64)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    pairs = pairs[order]

    positions.setflags(write=False)
    pairs.setflags(write=False)
    return Lattice(dims=spec.dims, spacing=float(spec.spacing), positions=positions, neighbor_pairs=pairs)
