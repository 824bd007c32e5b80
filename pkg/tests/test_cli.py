import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from weyl_lab.cli import ConfigError, main, make_config, parse_terms, read_config, report_schema
from weyl_lab.structures import TrigTerm

FAST = "hypotheses,derivS,RS,lemma_alpha,commutation,scalar_identity,classify"


def _verify(capsys, *args):
    code = main(["verify", *args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_terms():
    terms = parse_terms("0.3 sin(0,1) - 0.1 cos(1, 0) + sin(2,2)", 2)
    assert terms[0] == TrigTerm(0.3, (0, 1), 0.0)
    assert terms[1].amplitude == -0.1 and terms[1].phase == pytest.approx(1.5707963267948966)
    assert terms[2].amplitude == 1.0
    assert parse_terms("0.2 mono(1,1,0)", 3, ("mono",))[0].wavevector == (1, 1, 0)
    for bad in ("0.3 sin(0,1) junk", "0.3 sin(0,1,2)", "tan(1,1)", "0.2 mono(1,1)"):
        with pytest.raises(ConfigError):
            parse_terms(bad, 2)


def test_config_file_roundtrip(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# triple product\nbuilder = triple_product\ndims = 1,2,1\nseed = 4\nsuite = RS, derivS\ntol-curvature = 1e-6\n")
    values = read_config(str(cfg))
    rc = make_config(values)
    assert rc.dims == (1, 2, 1) and rc.seed == 4 and rc.suites == ("derivS", "RS") and rc.tol_curvature == 1e-6
    (tmp_path / "bad.cfg").write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        read_config(str(tmp_path / "bad.cfg"))
    with pytest.raises(ConfigError):
        make_config({"grid": "4"})


def test_verify_passes_and_report_matches_schema(capsys, tmp_path):
    out = tmp_path / "r.json"
    table = tmp_path / "r.csv"
    code, _, err = _verify(capsys, "--dims", "1,1,1", "--suite", FAST, "--samples", "6", "--out", str(out), "--csv", str(table))
    assert code == 0
    assert "classification: criterion satisfied" in err
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, json.loads(report_schema()))
    assert doc["run"]["builder"] == "triple_product" and doc["run"]["params"]["dims"] == [1, 1, 1]
    rows = list(csv.DictReader(table.open()))
    assert [r["id"] for r in rows] == [s["id"] for s in doc["suites"]]


def test_all_suites_report_integrals_and_validate(capsys):
    code, out, _ = _verify(capsys, "--dims", "1,1,1", "--samples", "4", "--grid", "16")
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, json.loads(report_schema()))
    ids = {i["id"] for i in doc["integrals"]}
    assert {"integral.delta_beta", "star.integral"} <= ids


def test_failing_check_exits_one(capsys):
    code, out, err = _verify(capsys, "--dims", "1,1,1", "--suite", "classify", "--samples", "4", "--builder", "flat_cone")
    assert code == 0  # the cone is expected to violate the criterion
    code, out, err = _verify(capsys, "--dims", "1,1,1", "--suite", "RS", "--tol-curvature", "1e-30", "--samples", "4")
    assert code == 1
    assert "FAIL" in err
    doc = json.loads(out)
    assert doc["suites"][0]["pass"] is False


@pytest.mark.parametrize(
    "args,message",
    [
        (["--dims", "0,1,1"], "triple product needs d1 >= 1"),
        (["--dims", "1,1"], "three block dimensions"),
        (["--suite", "bogus"], "unknown suite"),
        (["--builder", "flat_cone", "--n", "6"], "n = 3 and n = 4"),
        (["--builder", "random_involutions", "--n", "9"], "3 <= n <= 8"),
        (["--f", "0.3 sin(0)"], "needs 2 entries"),
        (["--seed", "x"], "bad value for seed"),
    ],
)
def test_bad_input_exits_two(capsys, args, message):
    code, _, err = _verify(capsys, *args)
    assert code == 2
    assert message in err
    assert "Traceback" not in err


def test_random_involutions_builder(capsys):
    code, out, _ = _verify(capsys, "--builder", "random_involutions", "--n", "3,4", "--samples", "500", "--lambda2-samples", "100")
    assert code == 0
    doc = json.loads(out)
    assert doc["details"]["a_theorems"]["combos"] == 4 + 9
    assert any(s["id"] == "lambda2.trace[n=4]" for s in doc["suites"])


def test_rescaled_presets(capsys):
    for args in (["--preset", "inverse_radius"], ["--preset", "polynomial", "--u", "0.2 mono(1,1,0)"], ["--dims", "2,2"]):
        code, _, err = _verify(capsys, "--builder", "rescaled_product", "--suite", "rank1,derivS", "--samples", "5", *args)
        assert code == 0, err


def test_identical_reports_apart_from_timestamp(capsys):
    docs = []
    for _ in range(2):
        _, out, _ = _verify(capsys, "--dims", "1,2,1", "--seed", "3", "--suite", FAST, "--samples", "5")
        doc = json.loads(out)
        doc["run"].pop("timestamp")
        docs.append(doc)
    assert docs[0] == docs[1]


def test_schema_and_suites_commands(capsys):
    assert main(["schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    jsonschema.Draft202012Validator.check_schema(schema)
    assert main(["suites"]) == 0
    assert "condition_star" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "weyl_lab", "verify", "--dims", "2,0,1"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "d2 >= 1" in proc.stderr
