"""
Parameter sweeps over the full pipeline and the observables derived from them.

One pipeline point is: assemble H -> lowest orbitals -> integrals -> CI.
Sweeps run points as an independent map and return rows sorted by the swept
parameter.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .ci import build_determinant_basis, compute_integrals, diagonalize_ci, pair_amplitude
from .eigensolver import lowest_eigenpairs
from .errors import ConvergenceError, PipelineError, QdotError, ValidationError
from .hamiltonian import assemble_hamiltonian, load_potential_file

logger = logging.getLogger(__name__)

HBAR_EV_FS = 0.6582119569
DISTANCE_MARGIN_NM = 2.0
SPIN_TOLERANCE = 1e-6


@dataclass(eq=False)
class PointResult:
    lattice: object
    wells: object
    hamiltonian: object
    orbitals: object
    table: object
    basis: object
    spectrum: object
    timings: dict = field(default_factory=dict)

    @property
    def exchange_splitting(self):
        return self.spectrum.exchange_splitting

    def pair_amplitude(self, state=0):
        return pair_amplitude(self.spectrum.eigenvectors[:, state], self.basis, self.orbitals.eigenvectors)

    def half_space_masks(self):
        """Boolean site masks of the half-spaces on the well-a and well-b side."""
        ca = np.asarray(self.wells.center_a)
        cb = np.asarray(self.wells.center_b)
        axis = cb - ca
        if not np.any(axis):
            axis = np.array([1.0, 0.0, 0.0])
        s = (self.lattice.positions - 0.5 * (ca + cb)) @ axis
        return s < 0, s > 0

    def half_space_occupation(self, state=0):
        """Expected electron numbers ``(n_a, n_b)`` in the two half-spaces."""
        psi = self.pair_amplitude(state)
        density = 2.0 * np.einsum("asbt,asbt->a", psi, psi)
        side_a, side_b = self.half_space_masks()
        return float(density[side_a].sum()), float(density[side_b].sum())

    def same_side_probability(self, state=0):
        """Probability that both electrons sit in the same half-space.

        Small values mean one electron per dot; this is the inter-well
        localization measure used by the distance sweep.
        """
        psi = self.pair_amplitude(state)
        prob = np.einsum("asbt,asbt->ab", psi, psi)
        side_a, side_b = self.half_space_masks()
        return float(prob[np.ix_(side_a, side_a)].sum() + prob[np.ix_(side_b, side_b)].sum())


def run_point(cfg, wells=None, threads=1, potential=None):
    """Run the full pipeline once. ``wells`` overrides ``cfg.wells``."""
    timings = {}
    t0 = time.perf_counter()
    lattice = cfg.build_lattice()
    wells = cfg.wells if wells is None else wells
    if potential is None and cfg.potential_file is not None:
        potential = load_potential_file(cfg.potential_file, lattice.num_sites)
    H = assemble_hamiltonian(lattice, cfg.tb, wells, potential=potential)
    t1 = time.perf_counter()
    timings["assemble"] = t1 - t0

    orbitals = lowest_eigenpairs(
        H,
        cfg.solver.num_orbitals,
        tol=cfg.solver.tol,
        max_iterations=cfg.solver.max_iterations,
        force_dense=cfg.solver.force_dense,
    )
    t2 = time.perf_counter()
    timings["eigensolve"] = t2 - t1

    table = compute_integrals(orbitals, lattice, cfg.coulomb, cfg.ci_orbitals, threads=threads)
    t3 = time.perf_counter()
    timings["integrals"] = t3 - t2

    basis = build_determinant_basis(cfg.ci_orbitals)
    spectrum = diagonalize_ci(basis, table)
    timings["ci"] = time.perf_counter() - t3
    return PointResult(lattice, wells, H, orbitals, table, basis, spectrum, timings)


@dataclass(eq=False)
class SweepTable:
    parameter: str
    values: np.ndarray  # eV for detuning, nm for distance
    energies: np.ndarray  # (n, k) lowest CI levels, eV
    spin_squared: np.ndarray  # (n, k)
    exchange: np.ndarray  # (n,) J, eV
    points: list = None

    @property
    def gaps(self):
        """E1 - E0 per row."""
        return self.energies[:, 1] - self.energies[:, 0]

    def __len__(self):
        return self.values.shape[0]


def _run_sweep(parameter, values, make_wells, cfg, k, threads, keep_points, label):
    values = np.asarray(values, dtype=float)
    if k < 1 or k > cfg.ci_dimension:
        raise ValidationError("analysis", "levels", f"need 1 <= k <= CI dimension {cfg.ci_dimension}, got {k}")
    wells_list = [make_wells(v) for v in values]

    def task(i):
        try:
            return run_point(cfg, wells=wells_list[i], threads=1)
        except QdotError as exc:
            raise PipelineError(f"{label}={values[i]:.12g}", exc) from exc

    if threads > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(task, range(len(values))))
    else:
        results = [task(i) for i in range(len(values))]

    order = np.argsort(values, kind="stable")
    results = [results[i] for i in order]
    values = values[order]
    energies = np.array([r.spectrum.eigenvalues[:k] for r in results]).reshape(len(values), k)
    spins = np.array([r.spectrum.spin_squared[:k] for r in results]).reshape(len(values), k)
    exchange = np.array([r.exchange_splitting for r in results])
    return SweepTable(parameter, values, energies, spins, exchange, results if keep_points else None)


def detuned_wells(wells, delta):
    """Depths ``D + delta/2`` and ``D - delta/2`` around the mean depth ``D``."""
    base = 0.5 * (wells.depth_a_eV + wells.depth_b_eV)
    da, db = base + 0.5 * delta, base - 0.5 * delta
    if da < 0 or db < 0:
        raise ValidationError("analysis", "detuning", f"delta={delta} eV drives a depth below zero (base depth {base} eV)")
    return wells.with_depths(da, db)


def detuning_sweep(cfg, deltas, k, threads=1, keep_points=False):
    """CI levels versus detuning ``delta = depth_a - depth_b`` (eV)."""
    wells = cfg.wells
    for d in deltas:
        detuned_wells(wells, d)
    return _run_sweep(
        "delta_eV", deltas, lambda d: detuned_wells(wells, d), cfg, k, threads, keep_points, "delta_eV"
    )


def separated_wells(wells, lattice, d):
    """Wells ``d`` nm apart about the current midpoint, along the current axis."""
    ca = np.asarray(wells.center_a)
    cb = np.asarray(wells.center_b)
    mid = 0.5 * (ca + cb)
    axis = cb - ca
    norm = np.linalg.norm(axis)
    axis = np.array([1.0, 0.0, 0.0]) if norm == 0 else axis / norm
    new_a = mid - 0.5 * d * axis
    new_b = mid + 0.5 * d * axis
    lo = lattice.positions.min(axis=0)
    hi = lattice.positions.max(axis=0)
    extent = hi - lo
    for c in (new_a, new_b):
        # only axes the lattice actually spans carry a margin requirement
        spanned = extent > 0
        inside = (c[spanned] - lo[spanned] >= DISTANCE_MARGIN_NM) & (hi[spanned] - c[spanned] >= DISTANCE_MARGIN_NM)
        if not np.all(inside):
            raise ValidationError(
                "analysis", "separation", f"d={d} nm puts a well center within {DISTANCE_MARGIN_NM} nm of the lattice edge"
            )
    return type(wells)(tuple(new_a), tuple(new_b), wells.curvature_eV_per_nm2, wells.depth_a_eV, wells.depth_b_eV)


def distance_sweep(cfg, separations, k, threads=1, keep_points=False):
    """CI levels versus interdot distance (nm) at the configured depths."""
    lattice = cfg.build_lattice()
    wells = cfg.wells
    for d in separations:
        separated_wells(wells, lattice, d)
    return _run_sweep(
        "d_nm", separations, lambda d: separated_wells(wells, lattice, d), cfg, k, threads, keep_points, "d_nm"
    )


# --------------------------------------------------------------------------
# Two-level reduction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TLSParams:
    tunnel_coupling_eV: float
    lever_arm: float
    center_eV: float
    rms_residual_eV: float

    def asymmetry(self, delta):
        return self.lever_arm * (np.asarray(delta) - self.center_eV)


def anticrossing_gap(delta, tunnel_coupling, lever_arm, center=0.0):
    return np.sqrt(tunnel_coupling**2 + (lever_arm * (np.asarray(delta) - center)) ** 2)


def fit_anticrossing(sweep, gaps=None):
    """Least-squares fit of ``sqrt(Delta^2 + (eta (delta - delta0))^2)``.

    ``sweep`` is a :class:`SweepTable` (fit to its E1 - E0 column) or an array
    of detunings, in which case ``gaps`` must be given.
    """
    if isinstance(sweep, SweepTable):
        x, y = sweep.values, sweep.gaps
    else:
        x = np.asarray(sweep, dtype=float)
        y = np.asarray(gaps, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("analysis", "sweep", "detuning and gap arrays must be 1-D and the same length")
    if x.size < 5:
        raise ValidationError("analysis", "sweep", f"need at least 5 points, got {x.size}")
    if not (x.min() < 0 < x.max()):
        raise ValidationError("analysis", "sweep", "detuning values must span a sign change")

    i0 = int(np.argmin(y))
    delta0, c0 = y[i0], x[i0]
    far = np.abs(x - c0) > 0
    slopes = np.sqrt(np.maximum(y[far] ** 2 - delta0**2, 0.0)) / np.abs(x[far] - c0)
    eta0 = float(np.median(slopes)) if slopes.size else 0.0
    scale = max(float(np.max(np.abs(y))), 1e-300)

    def residual(p):
        return (anticrossing_gap(x, p[0], p[1], p[2]) - y) / scale

    def jacobian(p):
        g = np.maximum(anticrossing_gap(x, p[0], p[1], p[2]), 1e-300)
        u = x - p[2]
        return np.stack([p[0] / g, p[1] * u * u / g, -p[1] ** 2 * u / g], axis=1) / scale

    fit = least_squares(
        residual, [delta0, eta0, c0], jac=jacobian, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000
    )
    if not fit.success:
        raise ConvergenceError(f"anticrossing fit failed: {fit.message}", trace=fit.fun * scale)
    tunnel, eta, center = abs(fit.x[0]), abs(fit.x[1]), fit.x[2]
    if eta == 0.0:
        # flat data: the center is undefined, report the sampled minimum
        center = float(x[i0])
    rms = float(np.sqrt(np.mean((anticrossing_gap(x, tunnel, eta, center) - y) ** 2)))
    return TLSParams(float(tunnel), float(eta), float(center), rms)


@dataclass(frozen=True, eq=False)
class OscillationTrace:
    times_fs: np.ndarray
    p_right: np.ndarray


def coherent_oscillation(delta_eV, epsilon_eV, times):
    """P_right(t) for the two-level system ``H = 1/2 [[eps, Delta], [Delta, -eps]]``
    started in the left-localized state."""
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise ValidationError("analysis", "times", "times must be >= 0")
    omega2 = delta_eV**2 + epsilon_eV**2
    if omega2 == 0:
        return OscillationTrace(t, np.zeros_like(t))
    amplitude = delta_eV**2 / omega2
    p = amplitude * np.sin(np.sqrt(omega2) * t / (2.0 * HBAR_EV_FS)) ** 2
    return OscillationTrace(t, p)


# --------------------------------------------------------------------------
# Charge stability
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChargeStabilityMap:
    depths_a: np.ndarray
    depths_b: np.ndarray
    n_ground: np.ndarray  # (len(depths_a), len(depths_b)), values in {0, 1, 2}
    energies: np.ndarray  # (..., 3): E(0), E(1), E(2)
    chemical_potential_eV: float = 0.0


def ground_electron_number(e1, e2, mu=0.0):
    """argmin over N of E(N) - mu N with E(0) = 0; ties go to the smaller N."""
    costs = (0.0, e1 - mu, e2 - 2 * mu)
    best = 0
    for n in (1, 2):
        if costs[n] < costs[best]:
            best = n
    return best


def charge_stability(cfg, depths_a, depths_b, mu=0.0, threads=1):
    depths_a = np.asarray(depths_a, dtype=float)
    depths_b = np.asarray(depths_b, dtype=float)
    if np.any(depths_a < 0) or np.any(depths_b < 0):
        raise ValidationError("analysis", "depths", "grid depths must be >= 0")
    cells = [(i, j) for i in range(depths_a.size) for j in range(depths_b.size)]

    def task(cell):
        i, j = cell
        try:
            r = run_point(cfg, wells=cfg.wells.with_depths(depths_a[i], depths_b[j]), threads=1)
        except QdotError as exc:
            raise PipelineError(f"cell (depth_a_eV={depths_a[i]:.12g}, depth_b_eV={depths_b[j]:.12g})", exc) from exc
        return float(r.orbitals.eigenvalues[0]), r.spectrum.ground_energy

    if threads > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(task, cells))
    else:
        out = [task(c) for c in cells]

    n = np.zeros((depths_a.size, depths_b.size), dtype=np.int64)
    energies = np.zeros((depths_a.size, depths_b.size, 3))
    for (i, j), (e1, e2) in zip(cells, out):
        energies[i, j] = (0.0, e1, e2)
        n[i, j] = ground_electron_number(e1, e2, mu)
    return ChargeStabilityMap(depths_a, depths_b, n, energies, mu)


def spin_purity_violations(spin_squared, tol=SPIN_TOLERANCE):
    """Entries further than ``tol`` from both 0 and 2."""
    s = np.asarray(spin_squared)
    return np.flatnonzero((np.abs(s) > tol) & (np.abs(s - 2.0) > tol))
