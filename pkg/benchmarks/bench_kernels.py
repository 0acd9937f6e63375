"""
Time the numba and numpy variants of the hot kernels side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sites 40x20] [--orbitals 8]

The coulomb kernel is run on the pair densities of the lowest orbitals of a
double dot (the shape compute_integrals feeds it); the CI kernel on the
matching determinant basis. Compilation happens before timing.
"""

import argparse
import timeit
import warnings

import numpy as np

from qdot_ci import kernels
from qdot_ci.ci import CoulombParams, build_determinant_basis, compute_integrals, cube_averaged_onsite_u
from qdot_ci.eigensolver import SpectrumFractionWarning, partial_eigensolve
from qdot_ci.hamiltonian import TightBindingParams, TwoWellPotential, assemble_hamiltonian
from qdot_ci.lattice import LatticeSpec, build_lattice


def parse_dims(text):
    dims = tuple(int(x) for x in text.lower().split("x"))
    return dims + (1,) * (3 - len(dims))


def setup(dims, M):
    lat = build_lattice(LatticeSpec(dims, 1.0))
    c = lat.center
    wells = TwoWellPotential((c[0] - 4, c[1], c[2]), (c[0] + 4, c[1], c[2]), 0.02, 0.3, 0.3)
    H = assemble_hamiltonian(lat, TightBindingParams.effective_mass(1.0, lat.coordination), wells)
    spec = partial_eigensolve(H, max(M, 12))
    phi = spec.eigenvectors[:, :M]
    iu, ku = np.triu_indices(M)
    rho = np.ascontiguousarray(phi[:, iu] * phi[:, ku])
    params = CoulombParams(cube_averaged_onsite_u(1.0, 12.9), 12.9)
    table = compute_integrals(spec, lat, params, M)
    return lat, rho, params, table


def bench(fn, repeat):
    fn()  # compile / warm caches
    times = timeit.repeat(fn, number=1, repeat=repeat)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--sites", default="40x20", help="lattice dims, e.g. 40x20 or 20x20x4")
    parser.add_argument("--orbitals", type=int, default=8, help="CI orbitals M")
    args = parser.parse_args(argv)
    warnings.simplefilter("ignore", SpectrumFractionWarning)

    dims = parse_dims(args.sites)
    lat, rho, params, table = setup(dims, args.orbitals)
    idx = build_determinant_basis(args.orbitals).indices
    pos, u, scale = lat.positions, params.onsite_U_eV, params.tail_scale

    cases = [
        (
            f"coulomb_apply  N={lat.num_sites} pairs={rho.shape[1]}",
            lambda: kernels.coulomb_apply_numba(pos, rho, u, scale),
            lambda: kernels.coulomb_apply_numpy(pos, rho, u, scale),
        ),
        (
            f"ci_matrix      D={idx.shape[0]}",
            lambda: kernels.ci_matrix_numba(idx, table.one_body, table.two_body),
            lambda: kernels.ci_matrix_numpy(idx, table.one_body, table.two_body),
        ),
    ]

    print(f"{'kernel':40s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fast, ref in cases:
        diff = float(np.max(np.abs(fast() - ref())))
        t_numba = bench(fast, args.repeat)
        t_numpy = bench(ref, args.repeat)
        print(f"{name:40s} {t_numba:12.4f} {t_numpy:12.4f} {t_numpy / t_numba:8.2f} {diff:11.2e}")


if __name__ == "__main__":
    main()
