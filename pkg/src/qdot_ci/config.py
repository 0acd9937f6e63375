"""
Run configuration: JSON with one level of sections.

Example::

    {
      "lattice": {"dims": [40, 20, 1], "spacing_nm": 1.0},
      "tb": {"hopping_eV": -0.5686, "onsite_eV": 2.2745},
      "wells": {"center_a_nm": [15.5, 9.5, 0], "center_b_nm": [23.5, 9.5, 0],
                "curvature_eV_per_nm2": 0.02, "depth_a_eV": 0.3, "depth_b_eV": 0.3},
      "coulomb": {"onsite_U_eV": 0.2657, "epsilon_r": 12.9},
      "solver": {"num_orbitals": 12, "tol": 1e-9, "max_iterations": 300, "force_dense": false},
      "ci": {"num_orbitals": 8},
      "sweep": {"kind": "detuning", "start": -0.1, "stop": 0.1, "steps": 21},
      "output": {"directory": "out", "levels": 6}
    }

``tb`` may be omitted (GaAs effective-mass calibration with the band bottom
at 0 eV), as may ``coulomb.onsite_U_eV`` (cube-averaged ``1/r``).
"""

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .ci import CoulombParams, cube_averaged_onsite_u
from .errors import ValidationError
from .hamiltonian import GAAS_EFFECTIVE_MASS, TightBindingParams, TwoWellPotential
from .lattice import LatticeSpec, build_lattice

SWEEP_KINDS = ("detuning", "distance", "stability")


@dataclass(frozen=True)
class SolverConfig:
    num_orbitals: int = 12
    tol: float = 1e-9
    max_iterations: int = 300
    force_dense: bool = False


@dataclass(frozen=True)
class SweepConfig:
    kind: str = None
    start: float = -0.1
    stop: float = 0.1
    steps: int = 21
    values: tuple = None
    chemical_potential_eV: float = 0.0

    def grid(self):
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class OscillationConfig:
    tunnel_coupling_eV: float = None
    asymmetry_eV: float = None
    detuning_eV: float = 0.0
    t_stop_fs: float = 200.0
    steps: int = 201

    def times(self):
        return np.linspace(0.0, self.t_stop_fs, self.steps)


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    levels: int = 4


@dataclass(frozen=True)
class RunConfig:
    lattice: LatticeSpec
    tb: TightBindingParams
    wells: TwoWellPotential
    coulomb: CoulombParams
    solver: SolverConfig = field(default_factory=SolverConfig)
    ci_orbitals: int = 8
    sweep: SweepConfig = field(default_factory=SweepConfig)
    oscillation: OscillationConfig = field(default_factory=OscillationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    potential_file: str = None

    def __post_init__(self):
        n = self.lattice.num_sites
        m = self.solver.num_orbitals
        M = self.ci_orbitals
        if not 1 <= m <= n:
            raise ValidationError("solver", "num_orbitals", f"need 1 <= m <= N={n}, got {m}")
        if not 1 <= M <= m:
            raise ValidationError("ci", "num_orbitals", f"need 1 <= M <= m={m}, got {M}")
        D = M * (2 * M - 1)
        if not 1 <= self.output.levels <= D:
            raise ValidationError("output", "levels", f"need 1 <= k <= CI dimension {D}, got {self.output.levels}")

    @property
    def ci_dimension(self):
        return self.ci_orbitals * (2 * self.ci_orbitals - 1)

    def build_lattice(self):
        return build_lattice(self.lattice)

    def with_wells(self, wells):
        return replace(self, wells=wells)

    def to_dict(self):
        """Plain-JSON echo of the configuration (inverse of :func:`parse_config`)."""
        return {
            "lattice": {"dims": list(self.lattice.dims), "spacing_nm": self.lattice.spacing},
            "tb": asdict(self.tb),
            "wells": {
                "center_a_nm": list(self.wells.center_a),
                "center_b_nm": list(self.wells.center_b),
                "curvature_eV_per_nm2": self.wells.curvature_eV_per_nm2,
                "depth_a_eV": self.wells.depth_a_eV,
                "depth_b_eV": self.wells.depth_b_eV,
                "potential_file": self.potential_file,
            },
            "coulomb": asdict(self.coulomb),
            "solver": asdict(self.solver),
            "ci": {"num_orbitals": self.ci_orbitals},
            "sweep": {**asdict(self.sweep), "values": None if self.sweep.values is None else list(self.sweep.values)},
            "oscillation": asdict(self.oscillation),
            "output": asdict(self.output),
        }


_SECTIONS = {
    "lattice": {"dims", "spacing_nm"},
    "tb": {"hopping_eV", "onsite_eV", "effective_mass"},
    "wells": {"center_a_nm", "center_b_nm", "curvature_eV_per_nm2", "depth_a_eV", "depth_b_eV", "potential_file"},
    "coulomb": {"onsite_U_eV", "epsilon_r"},
    "solver": {"num_orbitals", "tol", "max_iterations", "force_dense"},
    "ci": {"num_orbitals"},
    "sweep": {"kind", "start", "stop", "steps", "values", "chemical_potential_eV"},
    "oscillation": {"tunnel_coupling_eV", "asymmetry_eV", "detuning_eV", "t_stop_fs", "steps"},
    "output": {"directory", "levels"},
}
_REQUIRED = ("lattice", "wells")


def _number(section, key, value, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(section, key, f"expected a number, got {value!r}")
    if kind is int:
        if value != int(value):
            raise ValidationError(section, key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _vector(section, key, value):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ValidationError(section, key, f"expected a list of 3 numbers, got {value!r}")
    return tuple(_number(section, key, v) for v in value)


def _coordination(dims):
    return 2 * sum(1 for n in dims if n > 1)


def parse_config(data):
    """Build a :class:`RunConfig` from a decoded JSON object."""
    if not isinstance(data, dict):
        raise ValidationError("config", "<root>", "top level must be a JSON object")
    for name, body in data.items():
        if name not in _SECTIONS:
            raise ValidationError("config", name, "unknown section")
        if not isinstance(body, dict):
            raise ValidationError("config", name, "section must be a JSON object")
        unknown = sorted(set(body) - _SECTIONS[name])
        if unknown:
            raise ValidationError(name, unknown[0], "unknown key")
    for name in _REQUIRED:
        if name not in data:
            raise ValidationError("config", name, "missing required section")

    lat = data["lattice"]
    for key in ("dims", "spacing_nm"):
        if key not in lat:
            raise ValidationError("lattice", key, "missing required key")
    dims = lat["dims"]
    if not isinstance(dims, (list, tuple)) or not 1 <= len(dims) <= 3:
        raise ValidationError("lattice", "dims", f"expected 1-3 integers, got {dims!r}")
    dims = tuple(_number("lattice", "dims", d, int) for d in dims) + (1,) * (3 - len(dims))
    lattice = LatticeSpec(dims, _number("lattice", "spacing_nm", lat["spacing_nm"]))

    tbd = data.get("tb", {})
    if "hopping_eV" in tbd:
        t = _number("tb", "hopping_eV", tbd["hopping_eV"])
        onsite = _number("tb", "onsite_eV", tbd.get("onsite_eV", _coordination(dims) * abs(t)))
        tb = TightBindingParams(t, onsite)
    else:
        mass = _number("tb", "effective_mass", tbd.get("effective_mass", GAAS_EFFECTIVE_MASS))
        if not mass > 0:
            raise ValidationError("tb", "effective_mass", "must be > 0")
        tb = TightBindingParams.effective_mass(lattice.spacing, _coordination(dims), mass)
        if "onsite_eV" in tbd:
            tb = replace(tb, onsite_eV=_number("tb", "onsite_eV", tbd["onsite_eV"]))

    w = data["wells"]
    potential_file = w.get("potential_file")
    if potential_file is not None and not isinstance(potential_file, str):
        raise ValidationError("wells", "potential_file", "expected a path string")
    for key in ("center_a_nm", "center_b_nm", "curvature_eV_per_nm2"):
        if key not in w:
            raise ValidationError("wells", key, "missing required key")
    wells = TwoWellPotential(
        _vector("wells", "center_a_nm", w["center_a_nm"]),
        _vector("wells", "center_b_nm", w["center_b_nm"]),
        _number("wells", "curvature_eV_per_nm2", w["curvature_eV_per_nm2"]),
        _number("wells", "depth_a_eV", w.get("depth_a_eV", 0.0)),
        _number("wells", "depth_b_eV", w.get("depth_b_eV", 0.0)),
    )

    c = data.get("coulomb", {})
    eps = c.get("epsilon_r", 12.9)
    eps = math.inf if eps is None else _number("coulomb", "epsilon_r", eps)
    if "onsite_U_eV" in c:
        onsite_u = _number("coulomb", "onsite_U_eV", c["onsite_U_eV"])
    else:
        onsite_u = cube_averaged_onsite_u(lattice.spacing, eps) if math.isfinite(eps) else 0.0
    coulomb = CoulombParams(onsite_u, eps)

    s = data.get("solver", {})
    solver = SolverConfig(
        num_orbitals=_number("solver", "num_orbitals", s.get("num_orbitals", SolverConfig.num_orbitals), int),
        tol=_number("solver", "tol", s.get("tol", SolverConfig.tol)),
        max_iterations=_number("solver", "max_iterations", s.get("max_iterations", SolverConfig.max_iterations), int),
        force_dense=bool(s.get("force_dense", False)),
    )
    if not solver.tol > 0:
        raise ValidationError("solver", "tol", "must be > 0")
    if solver.max_iterations < 1:
        raise ValidationError("solver", "max_iterations", "must be >= 1")

    ci_orbitals = _number("ci", "num_orbitals", data.get("ci", {}).get("num_orbitals", min(8, solver.num_orbitals)), int)

    sw = data.get("sweep", {})
    kind = sw.get("kind")
    if kind is not None and kind not in SWEEP_KINDS:
        raise ValidationError("sweep", "kind", f"expected one of {', '.join(SWEEP_KINDS)}, got {kind!r}")
    values = sw.get("values")
    if values is not None:
        if not isinstance(values, list) or not values:
            raise ValidationError("sweep", "values", "expected a non-empty list of numbers")
        values = tuple(_number("sweep", "values", v) for v in values)
    sweep = SweepConfig(
        kind=kind,
        start=_number("sweep", "start", sw.get("start", SweepConfig.start)),
        stop=_number("sweep", "stop", sw.get("stop", SweepConfig.stop)),
        steps=_number("sweep", "steps", sw.get("steps", SweepConfig.steps), int),
        values=values,
        chemical_potential_eV=_number("sweep", "chemical_potential_eV", sw.get("chemical_potential_eV", 0.0)),
    )
    if sweep.steps < 1:
        raise ValidationError("sweep", "steps", "must be >= 1")

    o = data.get("oscillation", {})
    osc = OscillationConfig(
        tunnel_coupling_eV=None if o.get("tunnel_coupling_eV") is None else _number("oscillation", "tunnel_coupling_eV", o["tunnel_coupling_eV"]),
        asymmetry_eV=None if o.get("asymmetry_eV") is None else _number("oscillation", "asymmetry_eV", o["asymmetry_eV"]),
        detuning_eV=_number("oscillation", "detuning_eV", o.get("detuning_eV", 0.0)),
        t_stop_fs=_number("oscillation", "t_stop_fs", o.get("t_stop_fs", OscillationConfig.t_stop_fs)),
        steps=_number("oscillation", "steps", o.get("steps", OscillationConfig.steps), int),
    )
    if osc.t_stop_fs < 0:
        raise ValidationError("oscillation", "t_stop_fs", "must be >= 0")
    if osc.steps < 1:
        raise ValidationError("oscillation", "steps", "must be >= 1")

    out = data.get("output", {})
    directory = out.get("directory", OutputConfig.directory)
    if not isinstance(directory, str):
        raise ValidationError("output", "directory", "expected a path string")
    output = OutputConfig(directory, _number("output", "levels", out.get("levels", OutputConfig.levels), int))

    return RunConfig(
        lattice=lattice,
        tb=tb,
        wells=wells,
        coulomb=coulomb,
        solver=solver,
        ci_orbitals=ci_orbitals,
        sweep=sweep,
        oscillation=osc,
        output=output,
        potential_file=potential_file,
    )


def load_config(path):
    """Read and validate a JSON run configuration.

    JSON syntax errors surface as :class:`ValidationError` with the line and
    column of the problem.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError("config", f"line {exc.lineno}", f"column {exc.colno}: {exc.msg}") from None
    return parse_config(data)
