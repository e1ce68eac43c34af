import json
import subprocess
import sys

import numpy as np
import pytest

from lhvsep import io
from lhvsep.cli import main
from lhvsep.linalg import frobenius


@pytest.fixture
def files(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_verdict_on_singlet(files, capsys):
    assert main(["gen", "state", "singlet", "-o", "s.json"]) == 0
    assert main(["verdict", "s.json", "-o", "v.json"]) == 0
    err = capsys.readouterr().err
    assert "Entangled" in err and "-0.5" in err
    v = io.load("v.json")
    assert v.kind == "Entangled"
    assert v.certificate[0] == pytest.approx(-0.5, abs=1e-9)


def test_pipeline_reproduces_state(files, capsys):
    assert main(["gen", "ensemble", "random", "--k", "3", "--seed", "7", "-o", "ens.json"]) == 0
    assert main(["gen", "povm", "default14", "-o", "p.json"]) == 0
    assert main(["build-lhv", "ens.json", "p.json", "p.json", "-o", "model.json"]) == 0
    assert main(["check-lhv", "model.json", "-o", "report.json"]) == 0
    assert io.load("report.json").ok
    assert main(["reconstruct", "model.json", "-o", "ens2.json", "--state-out", "rho.json"]) == 0
    assert main(["verdict", "rho.json", "-o", "v.json"]) == 0
    from lhvsep.reconstruction import assemble_mixture

    original = assemble_mixture(io.load("ens.json"))
    assert frobenius(io.load("rho.json"), original) <= 1e-9
    v = io.load("v.json")
    assert v.kind == "Separable"
    assert frobenius(assemble_mixture(v.ensemble), original) <= 1e-7


def test_model_refs_are_relative_to_output(files):
    (files / "out").mkdir()
    main(["gen", "povm", "axes6", "-o", "p.json"])
    main(["gen", "ensemble", "classical", "-o", "e.json"])
    assert main(["build-lhv", "e.json", "p.json", "p.json", "-o", "out/m.json"]) == 0
    assert json.loads((files / "out" / "m.json").read_text())["payload"]["povmA"] == "../p.json"
    assert len(io.load("out/m.json")) == 2


def test_reconstruct_inconsistent_model(files, capsys):
    main(["gen", "povm", "default14", "-o", "p.json"])
    main(["gen", "ensemble", "random", "--seed", "1", "-o", "e.json"])
    main(["build-lhv", "e.json", "p.json", "p.json", "-o", "m.json"])
    doc = json.loads((files / "m.json").read_text())
    r = doc["payload"]["entries"][1]["responsesA"]
    # hand edit: shift weight between the +x and -x effects
    r[0] += 0.05
    r[1] -= 0.05
    (files / "bad.json").write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["reconstruct", "bad.json"]) == 2
    err = capsys.readouterr().err
    assert "lambda 1" in err or "lambda=1" in err
    assert "consistency (lambda=1, side=A, constraint=" in err
    assert main(["check-lhv", "bad.json"]) == 2


def test_constraints_command(files):
    main(["gen", "povm", "axes6", "-o", "p.json"])
    assert main(["constraints", "p.json", "-o", "c.json"]) == 0
    assert len(io.load("c.json")) == 2


def test_simulate_and_compare(files, capsys):
    main(["gen", "povm", "default14", "-o", "p.json"])
    main(["gen", "ensemble", "random", "--seed", "2", "-o", "e.json"])
    main(["build-lhv", "e.json", "p.json", "p.json", "-o", "m.json"])
    main(["reconstruct", "m.json", "-o", "e2.json", "--state-out", "rho.json"])
    assert main(["simulate", "quantum", "rho.json", "p.json", "p.json", "--n", "100000", "--seed", "3",
                 "-o", "q.json"]) == 0
    assert main(["simulate", "lhv", "m.json", "--n", "100000", "--seed", "4", "--jobs", "3", "-o", "l.json"]) == 0
    assert main(["simulate", "quantum", "rho.json", "p.json", "p.json", "--exact", "-o", "d.json"]) == 0
    assert main(["compare", "q.json", "d.json", "-o", "c1.json"]) == 0
    assert main(["compare", "l.json", "q.json", "-o", "c2.json"]) == 0
    assert io.load("c1.json").passed and io.load("c2.json").passed
    assert io.load("q.json").n == 100_000


def test_gleason_fit_command(files):
    assert main(["gen", "frame", "--dim", "3", "-o", "f.json"]) == 0
    rho = np.diag([0.5, 1 / 3, 1 / 6]).astype(complex)
    from lhvsep.linalg import DensityOperator

    io.dump(DensityOperator(rho, (3, 1)), "rho.json")
    assert main(["gen", "responses", "f.json", "rho.json", "-o", "r.json"]) == 0
    assert main(["gleason-fit", "f.json", "r.json", "-o", "fit.json"]) == 0
    assert frobenius(io.load("fit.json"), rho) <= 1e-8
    r = io.load("r.json")
    r.values[0] += 0.1
    io.dump(r, "bad.json")
    assert main(["gleason-fit", "f.json", "bad.json"]) == 2


def test_undetermined_exit_code(files):
    main(["gen", "state", "werner", "--p", "0.3", "-o", "w.json"])
    # PT-positive, but no search can reach a tolerance of 1e-300
    assert main(["verdict", "w.json", "--restarts", "1", "--tol", "1e-300", "-o", "v.json"]) == 3
    assert io.load("v.json").kind == "Undetermined"


def test_input_errors(files, capsys):
    assert main(["verdict", "missing.json"]) == 1
    (files / "trunc.json").write_text('{"kind": "state", "vers')
    assert main(["verdict", "trunc.json"]) == 1
    assert "line 1" in capsys.readouterr().err
    main(["gen", "povm", "axes6", "-o", "p.json"])
    assert main(["verdict", "p.json"]) == 1
    assert main(["gen", "state", "nonsense"]) == 1
    assert main(["gen", "povm", "nonsense"]) == 1


def test_invalid_state_is_invariant_error(files):
    (files / "bad.json").write_text(json.dumps(
        {"kind": "state", "version": 1, "payload": {"dims": [2, 1], "matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}}))
    assert main(["verdict", "bad.json"]) == 2


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_gen_state_to_stdout(capsys):
    assert main(["gen", "state", "maximally-mixed"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kind"] == "state"


def test_console_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "lhvsep", "gen", "povm", "ideal-z"], capture_output=True,
                         text=True, cwd=tmp_path, check=True)
    assert json.loads(out.stdout)["kind"] == "povm"
