"""Command-line front end.

A problem is a JSON document::

    {"schema": 1, "command": "spectrum",
     "params": {"L": 3.14159, "n_elements": 400, "boundary": "dirichlet"},
     "output": {"format": "csv", "path": "out.csv"}}

Exit status: 0 on success, 2 for invalid configurations, 3 when the library
reports a numerical failure.  Errors are written to stderr as one line
``selfadjoint: error=<kind> reason=<text>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import numpy as np

from . import bipartite as bp
from . import boundary as bd
from . import deficiency as df
from . import dirac as dr
from . import quadform as qf
from . import symmetry as sy
from .errors import SelfAdjointError

SCHEMA_VERSION = 1
COMMANDS = ("spectrum", "deficiency", "bipartite-curve", "bipartite-bound", "adiabatic",
            "separability", "dirac-circle", "dirac-interval", "poa", "symmetry-commutant",
            "disk-modes", "corner", "check-gap")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(ValueError):
    pass


class Result:
    """Output of one command in both serializations."""

    def __init__(self, data: dict, header: list, rows: list):
        self.data = data
        self.header = header
        self.rows = rows


# -- parameter validation ----------------------------------------------------

class Params:
    """Strict accessor: every key must be read, numeric ranges are checked."""

    def __init__(self, raw: Any, command: str):
        if not isinstance(raw, dict):
            raise ConfigError(f"{command}: params must be an object")
        self.raw = raw
        self.command = command
        self.seen: set = set()

    def _get(self, key, default):
        self.seen.add(key)
        if key not in self.raw:
            if default is _REQUIRED:
                raise ConfigError(f"{self.command}: missing parameter {key!r}")
            return default
        return self.raw[key]

    def real(self, key, default=None, *, lo=None, hi=None, lo_open=False, hi_open=False,
             allow_inf=False):
        v = self._get(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self.command}: {key} must be a number")
        v = float(v)
        if math.isnan(v) or (math.isinf(v) and not allow_inf):
            raise ConfigError(f"{self.command}: {key} must be finite")
        _check_range(self.command, key, v, lo, hi, lo_open, hi_open)
        return v

    def integer(self, key, default=None, *, lo=None, hi=None):
        v = self._get(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self.command}: {key} must be an integer")
        _check_range(self.command, key, v, lo, hi, False, False)
        return v

    def reals(self, key, default=None, *, min_len=1):
        v = self._get(key, default)
        if v is None:
            return None
        if not isinstance(v, list) or len(v) < min_len:
            raise ConfigError(f"{self.command}: {key} must be a list of >= {min_len} numbers")
        out = []
        for x in v:
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise ConfigError(f"{self.command}: {key} entries must be finite numbers")
            out.append(float(x))
        return out

    def choice(self, key, options, default=None):
        v = self._get(key, default)
        if v not in options:
            raise ConfigError(f"{self.command}: {key} must be one of {list(options)}")
        return v

    def flag(self, key, default=False):
        v = self._get(key, default)
        if not isinstance(v, bool):
            raise ConfigError(f"{self.command}: {key} must be true or false")
        return v

    def any(self, key, default=None):
        return self._get(key, default)

    def finish(self):
        extra = set(self.raw) - self.seen
        if extra:
            raise ConfigError(f"{self.command}: unknown parameters {sorted(extra)}")


_REQUIRED = object()


def _check_range(command, key, v, lo, hi, lo_open, hi_open):
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(f"{command}: {key} = {v!r} below {'(' if lo_open else '['}{lo!r}")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise ConfigError(f"{command}: {key} = {v!r} above {hi!r}{')' if hi_open else ']'}")


def _complex_matrix(value, what):
    if not isinstance(value, dict):
        raise ConfigError(f"{what} must be an object with a 'matrix' field")
    data = dict(value)
    data.setdefault("convention", bd.CONVENTION)
    try:
        return bd.unitary_matrix_from_dict(data)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{what}: {exc}") from None


def parse_boundary(value, dim: int) -> bd.BoundaryUnitary:
    """Named condition, ``{"robin": c}``, ``{"quasi_periodic": tau}`` or a matrix object."""
    try:
        if isinstance(value, str):
            if value not in ("dirichlet", "neumann"):
                raise ConfigError(f"unknown boundary condition {value!r}")
            return bd.named_condition(value, dim)
        if isinstance(value, dict) and set(value) == {"robin"}:
            c = value["robin"]
            if isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(c):
                raise ConfigError("robin parameter must be a finite number")
            return bd.robin(float(c), dim)
        if isinstance(value, dict) and set(value) == {"quasi_periodic"}:
            if dim != 2:
                raise ConfigError("quasi_periodic needs a two-point boundary")
            tau = value["quasi_periodic"]
            if isinstance(tau, bool) or not isinstance(tau, (int, float)) or not math.isfinite(tau):
                raise ConfigError("quasi_periodic parameter must be a finite number")
            return bd.quasi_periodic(float(tau))
        if isinstance(value, dict) and "matrix" in value:
            if value.get("convention", bd.CONVENTION) != bd.CONVENTION:
                raise ConfigError(f"boundary convention must be {bd.CONVENTION!r}")
            U = _complex_matrix(value, "boundary")
            if U.shape != (dim, dim):
                raise ConfigError(f"boundary matrix must be {dim}x{dim}")
            return bd.from_matrix(U)
    except ConfigError:
        raise
    except (ValueError, SelfAdjointError) as exc:
        raise ConfigError(f"boundary: {exc}") from None
    raise ConfigError("boundary must be 'dirichlet', 'neumann', {'robin': c}, "
                      "{'quasi_periodic': tau} or {'matrix': [...]}")


def _open_grid(p: Params, key: str, count_key: str, lo: float, hi: float):
    """Explicit list under ``key`` or ``count_key`` equispaced interior points of (lo, hi)."""
    explicit = p.reals(key)
    n = p.integer(count_key, lo=1)
    if (explicit is None) == (n is None):
        raise ConfigError(f"{p.command}: give exactly one of {key!r} or {count_key!r}")
    if explicit is not None:
        return explicit
    return [float(x) for x in np.linspace(lo, hi, n + 2)[1:-1]]


def _rng(seed):
    return np.random.default_rng(seed)


# -- commands ----------------------------------------------------------------

def _spectral_result(res, extra=None) -> Result:
    rows = [[i, e, r] for i, e, r in res.rows()]
    data = {"eigenvalues": [float(e) for e in res.eigenvalues],
            "residuals": [float(r) for r in res.residuals]}
    data.update(extra or {})
    return Result(data, ["index", "eigenvalue", "residual"], rows)


def cmd_spectrum(p: Params, ctx) -> Result:
    L = p.real("L", _REQUIRED, lo=0, lo_open=True)
    n = p.integer("n_elements", 400, lo=4, hi=20000)
    bu = parse_boundary(p.any("boundary", _REQUIRED), 2)
    n_eigs = p.integer("n_eigs", 5, lo=1)
    semibound = p.flag("semibound", False)
    p.finish()
    if n_eigs > n + 1 - bu.w_dim:
        raise ConfigError(f"spectrum: n_eigs exceeds the {n + 1 - bu.w_dim} discrete modes")
    if semibound and bu.no_gap:
        raise ConfigError("spectrum: semibound check needs a gapped boundary unitary")
    return lambda: _run_spectrum(L, n, bu, n_eigs, semibound, ctx)


def _run_spectrum(L, n, bu, n_eigs, semibound, ctx):
    asm = qf.assemble(L, n, bu)
    extra = {"L": L, "n_elements": n, "gap_delta": bu.gap_delta, "w_dim": bu.w_dim}
    if semibound:
        est = qf.semibound_estimate(asm, 200, rng=_rng(ctx.seed))
        extra.update(lower_bound_estimate=est.lower_bound_estimate,
                     certified_bound=est.certified_bound)
    return _spectral_result(qf.solve(asm, n_eigs), extra)


def cmd_deficiency(p: Params, ctx) -> Result:
    kind = p.choice("kind", ("half_line", "interval", "bipartite"), "half_line")
    grid_n = p.integer("grid_n", 4000, lo=100, hi=200000)
    extent = p.real("grid_extent", 40.0, lo=0, lo_open=True)
    length = p.real("length", 1.0, lo=0, lo_open=True)
    lambdas = p.reals("lambdas", [2.0, 1.0] if kind == "bipartite" else None, min_len=1)
    include = p.flag("include_basis", False)
    p.finish()
    if kind == "half_line" or kind == "bipartite":
        if math.exp(-extent / math.sqrt(2)) >= df.DECAY_TOL:
            raise ConfigError(f"deficiency: grid_extent {extent} too short for decay to 1e-8")
    if kind == "bipartite":
        if any(a < b for a, b in zip(lambdas, lambdas[1:])):
            raise ConfigError("deficiency: lambdas must be sorted in descending order")
        for lam in lambdas:
            rate = min(df.decay_root(lam - 1j).real, df.decay_root(lam + 1j).real)
            if math.exp(-rate * extent) >= df.DECAY_TOL:
                raise ConfigError(f"deficiency: grid_extent too short for lambda = {lam!r}")

    def run():
        if kind == "interval":
            pair = df.interval_laplacian_deficiency(length, grid_n)
        else:
            pair = df.half_line_laplacian_deficiency(extent, grid_n)
            if kind == "bipartite":
                pair = df.bipartite_deficiency(pair, lambdas)
        rp = df.laplacian_residual(pair, "plus")
        rm = df.laplacian_residual(pair, "minus")
        data = {"kind": kind, "n_plus": pair.n_plus, "n_minus": pair.n_minus,
                "residual_plus": [float(r) for r in rp],
                "residual_minus": [float(r) for r in rm]}
        if include:
            data.update(pair.to_dict())
        header = ["which", "index", "residual"]
        rows = ([["plus", i, float(r)] for i, r in enumerate(rp)]
                + [["minus", i, float(r)] for i, r in enumerate(rm)])
        return Result(data, header, rows)
    return run


def cmd_bipartite_curve(p: Params, ctx) -> Result:
    sigma = p.real("sigma", _REQUIRED, lo=0)
    alpha1 = _open_grid(p, "alpha1", "n_samples", 0.0, math.pi)
    p.finish()

    def run():
        curve = bp.compatibility_curve(sigma, alpha1)
        pts = [{"alpha1": a, "alpha2": b, "residual": abs(bp.compatibility_residual(sigma, a, b))}
               for a, b in curve]
        data = {"sigma": sigma, "points": pts,
                "omitted": [{"alpha1": a, "reason": r} for a, r in curve.omitted]}
        rows = [[q["alpha1"], q["alpha2"], q["residual"]] for q in pts]
        return Result(data, ["alpha1", "alpha2", "residual"], rows)
    return run


def _system(p: Params):
    l1 = p.real("lambda1", _REQUIRED)
    l2 = p.real("lambda2", _REQUIRED)
    if l1 < l2:
        raise ConfigError(f"{p.command}: lambda1 must be >= lambda2")
    return bp.BipartiteSystem(l1, l2)


def _states_result(states) -> Result:
    data = {"states": [s.to_dict() for s in states]}
    return Result(data, list(bp.CSV_FIELDS), [s.csv_row() for s in states])


def cmd_bipartite_bound(p: Params, ctx) -> Result:
    sys_ = _system(p)
    a1 = p.real("alpha1", _REQUIRED)
    p.finish()
    if abs(abs(math.remainder(a1, 2 * math.pi)) - math.pi) <= bp.SINGULAR_TOL:
        raise ConfigError("bipartite-bound: alpha1 = pi is singular")
    t = math.tan(a1 / 2)
    if t * t - sys_.sigma <= bp.EDGE_TOL * max(1.0, sys_.sigma) or t <= 0:
        raise ConfigError("bipartite-bound: no bound state (need tan(alpha1/2) > sqrt(sigma))")
    return lambda: _states_result([bp.bound_state(sys_, a1)])


def cmd_adiabatic(p: Params, ctx) -> Result:
    sys_ = _system(p)
    s = _open_grid(p, "s", "n_samples", 0.0, math.pi / 2)
    p.finish()
    return lambda: _states_result(bp.adiabatic_path(sys_, s))


def cmd_separability(p: Params, ctx) -> Result:
    bu = parse_boundary(p.any("boundary", _REQUIRED), 2)
    t = p.real("evolve_time", 2.0, lo=0, lo_open=True)
    R = p.real("R", 12.0, lo=0, lo_open=True)
    n = p.integer("n_elements", 400, lo=8, hi=1000)
    lambdas = p.reals("lambdas", [2.0, 1.0], min_len=2)
    p.finish()
    if len(lambdas) != 2:
        raise ConfigError("separability: lambdas must have two entries")
    if bu.no_gap:
        raise ConfigError("separability: boundary unitary has no gap at -1")

    def run():
        mesh = bp.half_line_mesh(bu, R, n, lambdas)
        r = bp.separability_test(bu, t, mesh)
        data = {"verdict": r.verdict, "max_entropy": r.max_entropy,
                "times": [float(x) for x in r.times], "entropies": [float(x) for x in r.entropies]}
        return Result(data, ["time", "entropy"], [[a, b] for a, b in zip(r.times, r.entropies)])
    return run


def cmd_dirac_circle(p: Params, ctx) -> Result:
    n = p.integer("n_modes", _REQUIRED, lo=0, hi=2000)
    p.finish()
    return lambda: _spectral_result(dr.circle_dirac_spectrum(n), {"n_modes": n})


def cmd_dirac_interval(p: Params, ctx) -> Result:
    L = p.real("L", 1.0, lo=0, lo_open=True)
    u = p.any("u_map", _REQUIRED)
    n_eigs = p.integer("n_eigs", None, lo=1)
    bracket = p.reals("bracket", [-20.0, 20.0], min_len=2)
    cells = p.integer("scan_cells", dr.SCAN_CELLS, lo=1, hi=10 ** 7)
    halvings = p.integer("max_halvings", dr.MAX_HALVINGS, lo=0, hi=12)
    p.finish()
    if len(bracket) != 2 or not bracket[1] > bracket[0]:
        raise ConfigError("dirac-interval: bracket must be [lo, hi] with lo < hi")
    if isinstance(u, dict) and set(u) == {"decoupled"}:
        taus = u["decoupled"]
        if (not isinstance(taus, list) or len(taus) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in taus)):
            raise ConfigError("dirac-interval: decoupled must be [tau0, tau_L]")
        U = np.diag(np.exp(1j * np.array(taus, dtype=float)))
    else:
        U = _complex_matrix(u, "u_map")
        if U.shape != (2, 2):
            raise ConfigError("dirac-interval: u_map must be 2x2")
    try:
        setup = dr.interval_setup(U)
    except ValueError as exc:
        raise ConfigError(f"dirac-interval: {exc}") from None
    return lambda: _spectral_result(
        dr.interval_dirac_spectrum(L, setup, n_eigs, tuple(bracket), cells, halvings),
        {"L": L, "setup": setup.to_dict()})


def cmd_poa(p: Params, ctx) -> Result:
    kind = p.choice("kind", ("position", "momentum"), _REQUIRED)
    n_pairs = p.integer("n_pairs", 100, lo=1)
    if kind == "position":
        grid = p.reals("grid", None, min_len=2)
        if grid is None:
            n = p.integer("n_points", 40, lo=2, hi=5000)
            ext = p.real("extent", 1.0, lo=0, lo_open=True)
            grid = [float(x) for x in np.linspace(-ext, ext, n)]
        else:
            p.integer("n_points")
            p.real("extent")
        g = np.array(grid)
        if not np.allclose(np.sort(g), -np.sort(g)[::-1], atol=1e-12):
            raise ConfigError("poa: position grid must be symmetric about 0")
        p.finish()
        build = lambda: dr.build_sector_split("position", grid=grid)
    else:
        n_f = p.integer("n_fourier", _REQUIRED, lo=1, hi=4001)
        if n_f % 2 == 0:
            raise ConfigError("poa: n_fourier must be odd")
        p.finish()
        build = lambda: dr.build_sector_split("momentum", n_fourier=n_f)

    def run():
        split = build()
        rng = _rng(ctx.seed)
        defect = dr.additivity_defect(split, n_pairs, rng)
        T = dr.reconstruct_operator(split, rng=rng)
        lp, lm = split.sector_bounds()
        if kind == "position":
            rec = float(np.abs(T - np.diag(np.array(grid))).max())
        else:
            rec = float(np.abs(T - dr.momentum_matrix(split.dim)).max())
        data = {"kind": kind, "dim": split.dim, "additivity_defect": defect,
                "lambda_min_plus": lp, "lambda_max_minus": lm,
                "reconstruction_error": rec}
        return Result(data, ["quantity", "value"], [[k, v] for k, v in data.items()])
    return run


def cmd_symmetry_commutant(p: Params, ctx) -> Result:
    N = p.integer("n_max", sy.DEFAULT_N, lo=0, hi=200)
    unitary = p.any("unitary", "admissible")
    samples = p.reals("samples", list(sy.DEFAULT_SAMPLES))
    n_random = p.integer("n_random", 20, lo=1)
    if unitary == "admissible":
        phases = p.reals("phases", None)
        radial = p.any("radial_factor", None)
        u = np.eye(1) if radial is None else _complex_matrix(radial, "radial_factor")
        if bd.unitarity_defect(u) > bd.UNITARY_TOL:
            raise ConfigError("symmetry-commutant: radial_factor is not unitary")
        if phases is not None and len(phases) != 2 * N + 1:
            raise ConfigError(f"symmetry-commutant: phases must have length {2 * N + 1}")
        mult = u.shape[0]
    elif unitary == "mode-shift":
        mult = 1
    else:
        raise ConfigError("symmetry-commutant: unitary must be 'admissible' or 'mode-shift'")
    p.finish()

    def run():
        rng = _rng(ctx.seed)
        rep = sy.u1_rep(N, mult, samples)
        if unitary == "admissible":
            beta = phases if phases is not None else list(rng.uniform(-3.0, 3.0, 2 * N + 1))
            U = sy.build_admissible(u, beta).assembled
        else:
            U = sy.mode_shift(N, mult)
        c = sy.commutant_check(U, rep)
        f = sy.invariance_of_form_check(U, rep, n_random, rng)
        data = {"unitary": unitary, "dim": rep.dim, "commutator_norm": c.max_norm,
                "commutes": c.passed, "form_defect": f.max_defect,
                "domain_defect": f.domain_defect, "form_invariant": f.passed,
                "control_violation": f.control_violation}
        return Result(data, ["quantity", "value"], [[k, v] for k, v in data.items()])
    return run


def cmd_disk_modes(p: Params, ctx) -> Result:
    modes = p.any("modes", [0, 1, 2, 3])
    if (not isinstance(modes, list) or not modes
            or not all(isinstance(m, int) and not isinstance(m, bool) for m in modes)):
        raise ConfigError("disk-modes: modes must be a nonempty list of integers")
    c = p.any("robin_c", "dirichlet")
    if c == "dirichlet":
        c = -math.inf
    elif isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(c):
        raise ConfigError("disk-modes: robin_c must be a finite number or 'dirichlet'")
    n = p.integer("n_elements", 400, lo=8, hi=20000)
    k = p.integer("n_eigs", 2, lo=1)
    p.finish()
    if k > n - 1:
        raise ConfigError("disk-modes: n_eigs exceeds the discrete modes")

    def run():
        with ThreadPoolExecutor(max_workers=ctx.threads) as pool:
            results = list(pool.map(lambda m: sy.disk_mode_spectrum(m, float(c), n, k), modes))
        rows, per_mode = [], []
        for m, res in zip(modes, results):
            per_mode.append({"m": m, "eigenvalues": [float(e) for e in res.eigenvalues],
                             "residuals": [float(r) for r in res.residuals]})
            rows += [[m, i, float(e), float(r)] for i, e, r in res.rows()]
        data = {"robin_c": None if math.isinf(c) else c, "n_elements": n, "modes": per_mode}
        return Result(data, ["m", "index", "eigenvalue", "residual"], rows)
    return run


def cmd_corner(p: Params, ctx) -> Result:
    theta = p.real("theta_opening", _REQUIRED, lo=0, hi=2 * math.pi, lo_open=True, hi_open=True)
    eps = p.real("epsilon", 1e-2, lo=0, hi=0.1, lo_open=True, hi_open=True)
    n_quad = p.integer("n_quad", 1000, lo=1000, hi=100000)
    p.finish()

    def run():
        data = sy.corner_singularity(theta, eps, n_quad).to_dict()
        rows = [[k, v] for k, v in data.items() if not isinstance(v, list)]
        return Result(data, ["quantity", "value"], rows)
    return run


def cmd_check_gap(p: Params, ctx) -> Result:
    dim = p.integer("dim", 2, lo=1, hi=64)
    bu = parse_boundary(p.any("boundary", _REQUIRED), dim)
    p.finish()

    def run():
        data = {"gap_delta": bu.gap_delta, "w_dim": bu.w_dim, "no_gap": bu.no_gap,
                "dim": bu.dim}
        return Result(data, ["quantity", "value"], [[k, v] for k, v in data.items()])
    return run


HANDLERS = {
    "spectrum": cmd_spectrum, "deficiency": cmd_deficiency,
    "bipartite-curve": cmd_bipartite_curve, "bipartite-bound": cmd_bipartite_bound,
    "adiabatic": cmd_adiabatic, "separability": cmd_separability,
    "dirac-circle": cmd_dirac_circle, "dirac-interval": cmd_dirac_interval, "poa": cmd_poa,
    "symmetry-commutant": cmd_symmetry_commutant, "disk-modes": cmd_disk_modes,
    "corner": cmd_corner, "check-gap": cmd_check_gap,
}


_NUM = {"type": ["number", "null", "string"]}
_NUMS = {"type": "array", "items": _NUM}
_SPECTRAL = {"eigenvalues": _NUMS, "residuals": _NUMS}
_REQUIRED_KEYS = {
    "spectrum": _SPECTRAL,
    "deficiency": {"n_plus": {"type": "integer"}, "n_minus": {"type": "integer"},
                   "residual_plus": _NUMS, "residual_minus": _NUMS},
    "bipartite-curve": {"sigma": _NUM, "points": {"type": "array"}, "omitted": {"type": "array"}},
    "bipartite-bound": {"states": {"type": "array", "minItems": 1}},
    "adiabatic": {"states": {"type": "array"}},
    "separability": {"verdict": {"enum": ["separable", "entangling"]}, "max_entropy": _NUM,
                     "times": _NUMS, "entropies": _NUMS},
    "dirac-circle": _SPECTRAL,
    "dirac-interval": _SPECTRAL,
    "poa": {"additivity_defect": _NUM, "reconstruction_error": _NUM},
    "symmetry-commutant": {"commutes": {"type": "boolean"}, "form_invariant": {"type": "boolean"}},
    "disk-modes": {"modes": {"type": "array"}},
    "corner": {"exponent": _NUM, "h2_seminorm_class": {"enum": ["finite", "divergent"]}},
    "check-gap": {"gap_delta": _NUM, "w_dim": {"type": "integer"}},
}
OUTPUT_SCHEMAS = {
    cmd: {"type": "object", "additionalProperties": False,
          "required": ["schema", "command", "result"],
          "properties": {"schema": {"const": SCHEMA_VERSION}, "command": {"const": cmd},
                         "result": {"type": "object", "required": sorted(props),
                                    "properties": props}}}
    for cmd, props in _REQUIRED_KEYS.items()
}
CONFIG_SCHEMA = {
    "type": "object", "additionalProperties": False, "required": ["schema", "command"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "command": {"enum": list(COMMANDS)},
        "params": {"type": "object"},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"format": {"enum": ["csv", "json"]}, "path": {"type": "string"}}},
    },
}


# -- config and output -------------------------------------------------------

class Context:
    def __init__(self, seed: int, threads: int):
        self.seed = seed
        self.threads = threads


def parse_config(doc: Any) -> tuple[str, dict, dict]:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(doc) - {"schema", "command", "params", "output"}
    if extra:
        raise ConfigError(f"unknown config fields {sorted(extra)}")
    if doc.get("schema") != SCHEMA_VERSION or isinstance(doc.get("schema"), bool):
        raise ConfigError(f"schema must be {SCHEMA_VERSION}")
    command = doc.get("command")
    if command not in HANDLERS:
        raise ConfigError(f"command must be one of {list(COMMANDS)}")
    output = doc.get("output", {})
    if not isinstance(output, dict) or set(output) - {"format", "path"}:
        raise ConfigError("output may only contain 'format' and 'path'")
    if output.get("format", "csv") not in ("csv", "json"):
        raise ConfigError("output.format must be 'csv' or 'json'")
    if "path" in output and not isinstance(output["path"], str):
        raise ConfigError("output.path must be a string")
    return command, doc.get("params", {}), output


def _clean(v):
    if isinstance(v, float):
        return None if math.isnan(v) else (repr(v) if math.isinf(v) else v)
    if isinstance(v, (np.floating,)):
        return _clean(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def render(result: Result, command: str, fmt: str) -> str:
    if fmt == "json":
        doc = {"schema": SCHEMA_VERSION, "command": command, "result": _clean(result.data)}
        return json.dumps(doc, indent=1, allow_nan=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.header)
    for row in result.rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".selfadjoint-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(doc: Any, *, fmt: str | None = None, output: str | None = None, seed: int = 0,
        threads: int = 1, stdout=None) -> int:
    """Validate, dispatch and emit one problem; returns the exit status."""
    stdout = stdout or sys.stdout
    try:
        command, raw_params, out = parse_config(doc)
        ctx = Context(seed, threads)
        job = HANDLERS[command](Params(raw_params, command), ctx)
    except ConfigError as exc:
        _report("validation", exc)
        return EXIT_INVALID
    try:
        result = job()
    except (SelfAdjointError, AssertionError, np.linalg.LinAlgError) as exc:
        _report(type(exc).__name__, exc)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # a precondition the pre-dispatch checks did not cover
        _report("validation", exc)
        return EXIT_INVALID
    text = render(result, command, fmt or out.get("format", "csv"))
    path = output or out.get("path")
    if path:
        write_atomic(path, text)
    else:
        stdout.write(text)
    return EXIT_OK


def _report(kind, exc):
    reason = " ".join(str(exc).split())
    print(f"selfadjoint: error={kind} reason={reason}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="selfadjoint",
                                 description="Self-adjoint extensions from unitary boundary data.")
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path of a JSON problem definition")
    src.add_argument("--stdin", action="store_true", help="read the problem from stdin")
    ap.add_argument("--output", help="write the result to this path (atomic)")
    ap.add_argument("--format", choices=("csv", "json"), help="override output.format")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for mode sweeps")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if not 0 <= args.seed < 2 ** 64:
        _report("validation", "seed must be an unsigned 64-bit integer")
        return EXIT_INVALID
    if args.threads < 1:
        _report("validation", "threads must be >= 1")
        return EXIT_INVALID
    try:
        text = sys.stdin.read() if args.stdin else open(args.config, encoding="utf-8").read()
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        _report("validation", exc)
        return EXIT_INVALID
    return run(doc, fmt=args.format, output=args.output, seed=args.seed, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
