"""CSV writers. Every file has a header; floats carry 12 significant digits."""

import csv
import itertools

import numpy as np

VALUE_FLOOR = 1e-12


def fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_levels(path, spectrum, k):
    rows = ((i, spectrum.eigenvalues[i], spectrum.spin_squared[i]) for i in range(k))
    _write(path, ["index", "energy_eV", "spin_squared"], rows)


def sweep_header(first, k):
    return [first] + [f"E{i}_eV" for i in range(k)] + [f"S2_{i}" for i in range(k)] + ["J_eV"]


def write_sweep(path, sweep):
    k = sweep.energies.shape[1]
    rows = (
        [v, *e, *s, J] for v, e, s, J in zip(sweep.values, sweep.energies, sweep.spin_squared, sweep.exchange)
    )
    _write(path, sweep_header(sweep.parameter, k), rows)


def write_stability(path, stability):
    rows = (
        (a, b, stability.n_ground[i, j])
        for i, a in enumerate(stability.depths_a)
        for j, b in enumerate(stability.depths_b)
    )
    _write(path, ["depth_a_eV", "depth_b_eV", "n_ground"], rows)


def write_oscillation(path, trace):
    _write(path, ["t_fs", "p_right"], zip(trace.times_fs, trace.p_right))


def integral_rows(table, floor=VALUE_FLOOR):
    """``(i, j, k, l, value)`` for entries with ``|value| > floor``, lexicographic."""
    g = table.two_body
    M = g.shape[0]
    for i, j, k, l in itertools.product(range(M), repeat=4):
        v = g[i, j, k, l]
        if abs(v) > floor:
            yield i, j, k, l, v


def write_integrals(path, table):
    _write(path, ["i", "j", "k", "l", "value_eV"], integral_rows(table))


def write_tls_fit(path, params):
    _write(
        path,
        ["delta_eV_min", "tunnel_coupling_eV", "lever_arm", "rms_residual_eV"],
        [(params.center_eV, params.tunnel_coupling_eV, params.lever_arm, params.rms_residual_eV)],
    )


def read_csv(path):
    """Header and rows (as strings) of a CSV written by this module."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
