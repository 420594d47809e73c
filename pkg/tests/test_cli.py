import csv
import io
import json
import subprocess
import sys
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
import pytest
import scipy.linalg

import helpers
from gridmodal import cli, reports
from gridmodal.cases import BUNDLED, bundled_path, resolve_case
from gridmodal.exceptions import StepUnderflow

UNSTABLE = f"""
SYSTEM s_base=100 f=50
BUS id=1 kind=slack kv=132 vset=1.0
BUS id=2 kind=pv kv=132 vset=1.02
BRANCH from=2 to=1 r=0.004 x=0.5
UNIT bus=2 name=G1 mva=100 pset=90 machine{{{helpers.MACHINE}}}
    exciter{{st1a ka=200 efd_min=-10 efd_max=10}} governor{{none}}
"""

HEAVY = """
SYSTEM s_base=100 f=50
BUS id=1 kind=slack kv=132 vset=1.0
BUS id=2 kind=pq kv=132
BRANCH from=1 to=2 r=0.02 x=0.3
LOAD bus=2 p0=900 q0=300 a=0 b=0
"""


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_pf_writes_table_and_manifest(tmp_path):
    code, out, _ = run("pf", "smib", "--out", tmp_path)
    assert code == cli.EXIT_OK and "converged" in out
    rows = read_csv(tmp_path / "smib_pf.csv")
    assert list(rows[0]) == list(reports.PF_COLUMNS)
    assert [r["bus_id"] for r in rows] == ["1", "2"]
    assert float(rows[1]["p_inj_mw"]) == pytest.approx(200.0, abs=1e-6)
    man = json.loads((tmp_path / "smib_pf_manifest.json").read_text())
    assert man["command"] == "pf" and man["outputs"] == ["smib_pf.csv"]
    assert man["case_sha256"] == reports.file_sha256(bundled_path("smib"))


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GRIDMODAL_OUT", str(tmp_path / "env"))
    assert run("pf", "smib")[0] == 0
    assert (tmp_path / "env" / "smib_pf.csv").exists()


def test_case_file_path_is_accepted(tmp_path):
    path = tmp_path / "mine.case"
    path.write_text(bundled_path("smib").read_text())
    assert resolve_case(str(path)) == path
    code, _, _ = run("pf", path, "--out", tmp_path)
    assert code == 0 and (tmp_path / "mine_pf.csv").exists()


def test_modal_smib_without_pss(tmp_path):
    code, out, _ = run("modal", "smib", "--pss", "off", "--out", tmp_path)
    assert code == 0 and "stable" in out
    rows = read_csv(tmp_path / "smib_modal_pss-off.csv")
    assert list(rows[0]) == list(reports.MODAL_COLUMNS)
    band = [r for r in rows if 0.3 <= float(r["freq_hz"]) < 3.0]
    # one conjugate pair, written as two adjacent rows
    assert len(band) == 2
    assert band[0]["re"] == band[1]["re"] and float(band[0]["im"]) == -float(band[1]["im"])
    assert {band[0]["dominant_state_1"], band[0]["dominant_state_2"]} == {"G1.delta", "G1.omega"}
    assert len(rows) == 12


def test_modal_svg(tmp_path):
    code, _, _ = run("modal", "three_machine", "--svg", "--out", tmp_path)
    svg = (tmp_path / "three_machine_modal_pss-on.svg").read_text()
    assert code == 0 and svg.startswith("<?xml") and "<svg" in svg


def test_unstable_case_exit_code(tmp_path):
    path = tmp_path / "weak.case"
    path.write_text(UNSTABLE)
    code, out, _ = run("modal", path, "--out", tmp_path)
    assert code == cli.EXIT_UNSTABLE and "UNSTABLE" in out
    assert (tmp_path / "weak_modal_pss-on.csv").exists()


def test_power_flow_divergence_exit_code(tmp_path):
    path = tmp_path / "heavy.case"
    path.write_text(HEAVY)
    code, _, err = run("pf", path, "--out", tmp_path)
    assert code == cli.EXIT_PF
    assert json.loads(err)["error"] in ("Diverged", "SingularJacobian")


def test_malformed_case_exit_code(tmp_path):
    path = tmp_path / "junk.case"
    path.write_text("SYSTEM s_base=100 f=50\nBUS id=1 kind=slack kv=abc\n")
    code, _, err = run("pf", path, "--out", tmp_path)
    assert code == cli.EXIT_INPUT and json.loads(err)["error"] == "MalformedCase"


def test_missing_case_exit_code(tmp_path):
    code, _, err = run("pf", tmp_path / "nope.case")
    assert code == cli.EXIT_INPUT and json.loads(err)["error"] == "FileNotFound"


def test_eigen_failure_exit_code(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise np.linalg.LinAlgError("no convergence")

    monkeypatch.setattr(scipy.linalg, "eig", broken)
    code, _, err = run("modal", "smib", "--out", tmp_path)
    assert code == cli.EXIT_EIGEN and json.loads(err)["error"] == "NoConvergence"


def test_simulation_failure_exit_code(tmp_path, monkeypatch):
    import gridmodal.time_domain as td

    def broken(*args, **kwargs):
        raise StepUnderflow(12.5)

    monkeypatch.setattr(td, "simulate", broken)
    code, _, err = run("sim", "smib", "--t-end", "1", "--out", tmp_path)
    payload = json.loads(err)
    assert code == cli.EXIT_SIM and payload["error"] == "StepUnderflow" and payload["t"] == 12.5


@pytest.mark.parametrize("event", ["G1:pm:+5", "G1-pm-5%@1", "G1:pm:+5%@x"])
def test_malformed_event(tmp_path, event):
    code, _, err = run("sim", "smib", "--event", event, "--out", tmp_path)
    payload = json.loads(err)
    assert code == cli.EXIT_INPUT and payload["error"] == "BadEvent" and "grammar" in payload


def test_unknown_event_target(tmp_path):
    code, _, err = run("sim", "smib", "--event", "G7:pm:+5%@1", "--t-end", "2", "--out", tmp_path)
    assert code == cli.EXIT_INPUT and "G7" in json.loads(err)["reason"]


def test_sim_outputs(tmp_path):
    code, _, _ = run("sim", "smib", "--t-end", "2", "--event", "G1:vref:+0.01@0.5", "--svg",
                     "--out", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "smib_sim_pss-on.csv")
    assert list(rows[0])[0] == "t_s"
    assert {"G1.omega", "G1.delta", "G1.p_accel", "bus2.v_mag"} <= set(rows[0])
    assert len(rows) == 101 and float(rows[-1]["t_s"]) == 2.0
    svgs = sorted(p.name for p in tmp_path.glob("*.svg"))
    assert len(svgs) == len(reports.PLOT_QUANTITIES)
    man = json.loads((tmp_path / "smib_sim_pss-on_manifest.json").read_text())
    assert man["options"]["events"] == ["G1:vref:+0.01@0.5"]
    assert sorted(man["outputs"]) == sorted(svgs + ["smib_sim_pss-on.csv"])


def test_figures_are_reproducible(tmp_path):
    for d in ("a", "b"):
        assert run("sim", "smib", "--t-end", "1", "--svg", "--out", tmp_path / d)[0] == 0
        assert run("modal", "smib", "--svg", "--out", tmp_path / d)[0] == 0
    for p in (tmp_path / "a").glob("*.svg"):
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_cases_listing():
    code, out, _ = run("cases")
    rows = read_csv_text(out)
    assert code == 0 and [r["name"] for r in rows] == list(BUNDLED)
    smib = rows[0]
    assert (smib["buses"], smib["units"], smib["exact_pi"]) == ("2", "1", "1")


def read_csv_text(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gridmodal", "cases"], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("name,buses")


def test_number_format_is_stable():
    assert reports.fmt(-0.0) == "0"
    assert reports.fmt(1 / 3) == "0.333333333333"
    assert reports.fmt("G1.omega") == "G1.omega"
