import csv
import io
import json
import math
import pathlib
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from selfadjoint import bipartite as bp
from selfadjoint import cli

ROOT = pathlib.Path(__file__).resolve().parents[1]
CONFIGS = sorted((ROOT / "configs").glob("*.json"))
# eigenphase pi - 1e-7: outside W but inside the no-gap band
NEAR_M1 = {"matrix": [[math.cos(math.pi - 1e-7), math.sin(math.pi - 1e-7)], [0, 0], [0, 0], [1, 0]],
           "convention": "asorey"}
DIAG_M1_I = {"matrix": [[-1, 0], [0, 0], [0, 0], [0, 1]], "convention": "asorey"}


def invoke(command, params, fmt="csv", seed=0):
    out = io.StringIO()
    code = cli.run({"schema": 1, "command": command, "params": params,
                    "output": {"format": fmt}}, stdout=out, seed=seed)
    return code, out.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# -- worked examples ---------------------------------------------------------

def test_spectrum_dirichlet_example():
    code, text = invoke("spectrum", {"L": math.pi, "n_elements": 400, "boundary": "dirichlet"})
    assert code == 0
    ev = [float(r["eigenvalue"]) for r in rows(text)][:3]
    np.testing.assert_allclose(ev, [1, 4, 9], rtol=1e-4)


def test_check_gap_example():
    code, text = invoke("check-gap", {"boundary": DIAG_M1_I}, fmt="json")
    res = json.loads(text)["result"]
    assert code == 0
    assert res["gap_delta"] == pytest.approx(math.pi / 2, abs=1e-12)
    assert res["w_dim"] == 1


def test_bipartite_curve_example_matches_closed_form():
    grid = list(np.linspace(0, math.pi, 102)[1:-1])
    code, text = invoke("bipartite-curve", {"sigma": 1, "alpha1": grid})
    assert code == 0
    table = rows(text)
    assert table
    for r in table:
        a1, a2 = float(r["alpha1"]), float(r["alpha2"])
        # tan^2(a1/2) - tan^2(a2/2) = sigma, a2 in (0, pi)
        assert math.tan(a1 / 2) ** 2 - math.tan(a2 / 2) ** 2 == pytest.approx(1, abs=1e-10)
        assert 0 < a2 < math.pi
    _, js = invoke("bipartite-curve", {"sigma": 1, "alpha1": grid}, fmt="json")
    res = json.loads(js)["result"]
    assert len(res["points"]) + len(res["omitted"]) == 100


def test_csv_floats_round_trip():
    code, text = invoke("bipartite-curve", {"sigma": 0.5, "n_samples": 20})
    curve = bp.compatibility_curve(0.5, list(np.linspace(0, math.pi, 22)[1:-1]))
    got = [(float(r["alpha1"]), float(r["alpha2"])) for r in rows(text)]
    assert got == [tuple(p) for p in curve]


def test_adiabatic_csv_header_and_flags():
    code, text = invoke("adiabatic", {"lambda1": 2.0, "lambda2": 1.0, "n_samples": 10})
    assert code == 0
    assert text.splitlines()[0] == ",".join(bp.CSV_FIELDS)
    assert {r["flag"] for r in rows(text)} <= {"ok", "no_bound_state", "non_normalizable", "singular"}


def test_disk_modes_threads_do_not_change_output():
    params = {"modes": [0, 1, 2], "n_elements": 100, "n_eigs": 2}
    outs = []
    for threads in (1, 3):
        buf = io.StringIO()
        cli.run({"schema": 1, "command": "disk-modes", "params": params}, stdout=buf,
                threads=threads)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]


def test_seed_controls_randomized_checks():
    params = {"n_max": 4, "unitary": "admissible"}
    a = invoke("symmetry-commutant", params, "json", seed=1)[1]
    b = invoke("symmetry-commutant", params, "json", seed=1)[1]
    c = invoke("symmetry-commutant", params, "json", seed=2)[1]
    assert a == b != c


# -- exit codes --------------------------------------------------------------

INVALID = [
    ("spectrum", {"L": -1.0, "boundary": "dirichlet"}),
    ("spectrum", {"L": 0.0, "boundary": "dirichlet"}),
    ("spectrum", {"L": 1.0, "boundary": "dirichlet", "n_elements": 2}),
    ("spectrum", {"L": 1.0, "boundary": "dirichlet", "n_elements": 10, "n_eigs": 50}),
    ("spectrum", {"L": 1.0, "boundary": "periodic"}),
    ("spectrum", {"L": 1.0, "boundary": {"matrix": [[1, 0], [0, 0], [0, 0], [2, 0]]}}),
    ("spectrum", {"L": 1.0, "boundary": {"matrix": [[1, 0]]}}),
    ("spectrum", {"L": 1.0, "boundary": {"matrix": [[1, 0], [0, 0], [0, 0], [1, 0]],
                                         "convention": "kochubei"}}),
    ("spectrum", {"L": 1.0, "boundary": {"robin": float("nan")}}),
    ("spectrum", {"L": 1.0, "boundary": NEAR_M1, "semibound": True, "n_eigs": 1}),
    ("spectrum", {"L": 1.0}),
    ("spectrum", {"L": 1.0, "boundary": "dirichlet", "bogus": 1}),
    ("spectrum", {"L": True, "boundary": "dirichlet"}),
    ("deficiency", {"grid_extent": 5.0}),
    ("deficiency", {"grid_n": 10}),
    ("deficiency", {"kind": "sphere"}),
    ("deficiency", {"kind": "bipartite", "lambdas": [1.0, 2.0]}),
    ("deficiency", {"kind": "bipartite", "lambdas": [2.0, 1.0e9], "grid_extent": 40.0}),
    ("bipartite-curve", {"sigma": -1.0, "n_samples": 10}),
    ("bipartite-curve", {"sigma": 1.0}),
    ("bipartite-curve", {"sigma": 1.0, "n_samples": 10, "alpha1": [1.0]}),
    ("bipartite-bound", {"lambda1": 1.0, "lambda2": 2.0, "alpha1": 2.0}),
    ("bipartite-bound", {"lambda1": 2.0, "lambda2": 1.0, "alpha1": math.pi}),
    ("bipartite-bound", {"lambda1": 2.0, "lambda2": 1.0, "alpha1": 0.5}),
    ("adiabatic", {"lambda1": 1.0, "lambda2": 2.0, "n_samples": 5}),
    ("separability", {"boundary": NEAR_M1}),
    ("separability", {"boundary": "neumann", "evolve_time": 0.0}),
    ("separability", {"boundary": "neumann", "lambdas": [1.0, 2.0, 3.0]}),
    ("dirac-circle", {"n_modes": -1}),
    ("dirac-interval", {"u_map": {"matrix": [[1, 0], [0, 0], [0, 0], [2, 0]]}}),
    ("dirac-interval", {"u_map": {"decoupled": [0.0]}}),
    ("dirac-interval", {"u_map": {"decoupled": [0.0, 0.0]}, "bracket": [1.0, -1.0]}),
    ("dirac-interval", {"u_map": {"decoupled": [0.0, 0.0]}, "scan_cells": 0}),
    ("dirac-interval", {"u_map": {"decoupled": [0.0, 0.0]}, "L": -2.0}),
    ("poa", {"kind": "momentum", "n_fourier": 10}),
    ("poa", {"kind": "position", "grid": [0.0, 1.0, 2.0]}),
    ("poa", {"kind": "custom"}),
    ("symmetry-commutant", {"n_max": 2, "phases": [0.0, 1.0]}),
    ("symmetry-commutant", {"n_max": 1, "radial_factor": {"matrix": [[2, 0]]}}),
    ("symmetry-commutant", {"unitary": "random"}),
    ("disk-modes", {"modes": [], "n_elements": 100}),
    ("disk-modes", {"modes": [0], "n_elements": 4}),
    ("disk-modes", {"modes": [0], "robin_c": "neumann"}),
    ("corner", {"theta_opening": 0.0}),
    ("corner", {"theta_opening": 2 * math.pi}),
    ("corner", {"theta_opening": 1.0, "epsilon": 0.5}),
    ("corner", {"theta_opening": 1.0, "n_quad": 10}),
    ("check-gap", {"boundary": {"matrix": [[1, 0], [1, 0], [0, 0], [1, 0]]}}),
    ("check-gap", {"boundary": "dirichlet", "dim": 0}),
]


@pytest.mark.parametrize("command, params", INVALID, ids=lambda x: str(x)[:40])
def test_precondition_rejected_with_exit_2(command, params, capsys):
    code, out = invoke(command, params)
    err = capsys.readouterr().err
    assert code == 2 and out == ""
    assert err.startswith("selfadjoint: error=validation reason=")
    assert err.count("\n") == 1


@pytest.mark.parametrize("doc", [
    {"schema": 2, "command": "check-gap", "params": {"boundary": "dirichlet"}},
    {"schema": 1, "command": "fly", "params": {}},
    {"schema": 1, "command": "check-gap", "params": {"boundary": "dirichlet"}, "extra": 1},
    {"schema": 1, "command": "check-gap", "params": {"boundary": "dirichlet"},
     "output": {"format": "xml"}},
    {"schema": 1, "command": "check-gap", "params": {"boundary": "dirichlet"},
     "output": {"colour": "red"}},
    [1, 2, 3],
])
def test_bad_envelopes_rejected(doc):
    assert cli.run(doc, stdout=io.StringIO()) == 2


def test_numerical_failure_exit_3(capsys):
    code, out = invoke("dirac-interval", {"u_map": {"decoupled": [0.0, 0.0]},
                                          "bracket": [-0.5, 3.5], "scan_cells": 1,
                                          "max_halvings": 0})
    err = capsys.readouterr().err
    assert code == 3 and out == ""
    assert err.startswith("selfadjoint: error=BracketTooCoarse reason=")


def test_subprocess_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    r = subprocess.run([sys.executable, "-m", "selfadjoint", "--config", str(bad)],
                       capture_output=True, text=True)
    assert r.returncode == 2
    r = subprocess.run([sys.executable, "-m", "selfadjoint", "--stdin"],
                       input=json.dumps({"schema": 1, "command": "check-gap",
                                         "params": {"boundary": DIAG_M1_I}}),
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("quantity,value")
    assert cli.main(["--config", str(bad), "--threads", "0"]) == 2
    assert cli.main([]) == 2


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "out.json"
    code = cli.main(["--config", str(ROOT / "configs" / "check_gap.json"),
                     "--output", str(target)])
    assert code == 0
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]
    json.loads(target.read_text())


# -- schemas and determinism -------------------------------------------------

@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_shipped_configs_validate_and_are_deterministic(path, tmp_path):
    doc = json.loads(path.read_text())
    jsonschema.validate(doc, cli.CONFIG_SCHEMA)
    outs = []
    for k in range(2):
        target = tmp_path / f"run{k}"
        assert cli.main(["--config", str(path), "--output", str(target)]) == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    # the JSON rendering re-parses under the command's schema
    js = tmp_path / "run.json"
    assert cli.main(["--config", str(path), "--format", "json", "--output", str(js)]) == 0
    parsed = json.loads(js.read_text())
    jsonschema.validate(parsed, cli.OUTPUT_SCHEMAS[doc["command"]])
    assert json.loads(json.dumps(parsed)) == parsed


def test_every_command_has_a_shipped_config():
    shipped = {json.loads(p.read_text())["command"] for p in CONFIGS}
    assert shipped == set(cli.COMMANDS)
