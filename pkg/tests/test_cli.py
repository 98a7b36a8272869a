import csv
import json

import numpy as np
import pytest

from robustmc import cli, experiments as ex
from robustmc.core import InvariantViolation, ReplicateError
from robustmc.proximal import moreau_envelope
from robustmc.targets import coupled_quartic_2d, laplace_product


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_list_and_describe(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == len(ex.list_experiments()) >= 26
    assert cli.main(["describe", "fig1_mala_gauss2d"]) == 0
    spec = json.loads(capsys.readouterr().out)
    assert spec["sampler"]["id"] == "mala" and spec["target"]["id"] == "gaussian_2d"


NAMES = [name for name, _ in ex.list_experiments()]


@pytest.mark.parametrize("name", NAMES)
def test_dry_run_validates_registry(name):
    assert cli.main(["run", name, "--dry-run"]) == 0


def test_spec_json_round_trip():
    for name in NAMES:
        spec = ex.load_spec(name)
        assert ex.ExperimentSpec.from_dict(json.loads(spec.to_json())).to_dict() == spec.to_dict()


def test_envelope_output_is_huber(tmp_path):
    assert cli.main(["run", "fig12_moreau_envelope", "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "envelope.csv")
    assert header == ["x", "U", "envelope"]
    x = np.array([float(r[0]) for r in rows])
    env = np.array([float(r[2]) for r in rows])
    huber = np.where(np.abs(x) <= 1, x * x / 2, np.abs(x) - 0.5)
    assert np.max(np.abs(env - huber)) < 1e-12
    assert abs(moreau_envelope(laplace_product(1), 1.0, np.array([0.5]))[0] - 0.125) < 1e-15


def test_vector_field_output(tmp_path):
    assert cli.main(["run", "fig11_vector_fields", "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "vector_field.csv")
    assert header[:5] == ["sampler", "x1", "x2", "jump1", "jump2"]
    t = coupled_quartic_2d()
    for r in rows:
        if r[0] == "mala":
            x = np.array([float(r[1]), float(r[2])])
            assert np.allclose([float(r[3]), float(r[4])], 0.1 * t.gradient(x))
    assert {r[0] for r in rows} == {"mala", "malta", "tamed"}


def test_chain_run_writes_error_curve(tmp_path):
    args = ["run", "fig21_mala_cauchy", "--set", "n_iters=2000", "--set", "n_replicates=2", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    header, rows = read_csv(tmp_path / "error_curve.csv")
    assert header == ["n", "mse"] and all(float(r[1]) >= 0 for r in rows)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["spec"]["n_iters"] == 2000 and manifest["schema_version"] == ex.SCHEMA_VERSION
    assert set(manifest["files"]) >= {"error_curve.csv", "trace.csv"}


def test_rerun_from_manifest_is_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "fig14_barker_quartic", "--seed", "11", "--out", str(a)]) == 0
    assert cli.main(["run", str(a / "manifest.json"), "--out", str(b)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


def test_single_value_sweep_matches_run(tmp_path):
    assert cli.main(["sweep", "fig14_barker_quartic", "--values", "0.1", "--out", str(tmp_path / "s")]) == 0
    assert cli.main(["run", "fig14_barker_quartic", "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "s" / "point000" / "trace.csv").read_bytes() == (tmp_path / "r" / "trace.csv").read_bytes()
    header, rows = read_csv(tmp_path / "s" / "sweep.csv")
    assert header == ["value", "mean_acceptance", "final_mse", "n_replicates"] and len(rows) == 1


def test_usage_errors_exit_2(tmp_path):
    assert cli.main(["run", "no_such_experiment"]) == 2
    assert cli.main(["run", "fig1_mala_gauss2d", "--set", "n_iters=-5", "--out", str(tmp_path)]) == 2
    assert cli.main(["run", "fig1_mala_gauss2d", "--set", "x0=[1, 2, 3]", "--out", str(tmp_path)]) == 2
    assert cli.main(["sweep", "fig1_mala_gauss2d", "--out", str(tmp_path)]) == 2


def test_runtime_errors_exit_3(monkeypatch, tmp_path):
    def boom(*a, **k):
        raise ReplicateError(3, InvariantViolation("left the domain"))
    monkeypatch.setattr(ex, "run_experiment", boom)
    assert cli.main(["run", "fig1_mala_gauss2d", "--out", str(tmp_path)]) == 3


def test_paper_scale_touches_size_fields_only(tmp_path):
    spec = ex.load_spec("fig6_mala_laplace10k")
    scaled = ex.apply_paper_scale(spec)
    assert set(spec.paper_scale) <= ex.SIZE_FIELDS
    a, b = spec.to_dict(), scaled.to_dict()
    assert a["sampler"] == b["sampler"] and a["root_seed"] == b["root_seed"]
    assert b["target"]["params"]["dim"] == 10_000
    bad = spec.copy()
    bad.paper_scale = {"sampler.params.h": 1.0}
    with pytest.raises(ex.SpecError):
        ex.apply_paper_scale(bad)


def test_output_root_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(ex.OUTPUT_ENV, str(tmp_path))
    assert cli.main(["run", "fig12_moreau_envelope"]) == 0
    assert (tmp_path / "fig12_moreau_envelope" / "envelope.csv").exists()
