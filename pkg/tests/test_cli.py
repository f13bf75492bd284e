import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from qptomo import channels as ch
from qptomo import qform
from qptomo.cli import main


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)

    write.dir = tmp_path
    return write


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["re_z", "im_z", "q_value"]
    return np.array([[float(x) for x in r] for r in rows[1:]])


BS60 = {"kind": "bs", "theta": np.pi / 3}


def test_probe_bs_records(files, capsys):
    code, out, _ = run(["probe", "--channel", files("bs.json", BS60)], capsys)
    data = json.loads(out)
    d = [complex(*r["d"][0]) for r in data["records"]]
    assert code == 0 and len(d) == 6
    assert np.allclose(d, [0, 0.5, -0.5j, -0.5, 0.5j, 0.5 - 0.5j])
    assert data["header"]["sigma"] == 0.0


def test_probe_identity_conjugates(files, capsys):
    code, out, _ = run(["probe", "--channel", files("id.json", {"kind": "identity"}), "--probes", "0.5+1j;2;-1j", "--tp"], capsys)
    recs = json.loads(out)["records"]
    assert code == 0 and np.allclose([complex(*r["d"][0]) for r in recs], [0.5 - 1j, 2, 1j])


def test_probe_deterministic(files):
    chan = files("bs.json", BS60)
    outs = []
    for name in ("a.json", "b.json"):
        assert main(["probe", "--channel", chan, "--sigma", "1e-6", "--seed", "3", "--out", str(files.dir / name)]) == 0
        outs.append((files.dir / name).read_bytes())
    assert outs[0] == outs[1]


def test_probe_errors(files, capsys):
    chan = files("bs.json", BS60)
    assert run(["probe", "--channel", chan, "--probes", "0,1;1,0;1j,1;0,0;2,1;1,1"], capsys)[0] == 3
    assert run(["probe", "--channel", files("bad.json", "{not json")], capsys)[0] == 2
    code, _, err = run(["probe", "--channel", files("k.json", {"kind": "warp"})], capsys)
    assert code == 2 and "warp" in err
    assert run(["probe", "--bogus"], capsys)[0] == 2


def _records(files, channel=BS60, probes="default", *extra):
    path = str(files.dir / "recs.json")
    assert main(["probe", "--channel", files("chan.json", channel), "--probes", probes, "--out", path, *extra]) == 0
    return path


def test_reconstruct_bs(files, capsys):
    code, out, _ = run(["reconstruct", "--records", _records(files)], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["within_tolerance"]
    assert complex(*rep["blocks"]["X_ab"][0][0]) == pytest.approx(0.5)


def test_reconstruct_closed_form_matches(files, capsys):
    recs = _records(files)
    a = qform.form_from_dict(json.loads(run(["reconstruct", "--records", recs], capsys)[1])["choi"])
    b = qform.form_from_dict(json.loads(run(["reconstruct", "--records", recs, "--closed-form"], capsys)[1])["choi"])
    assert qform.forms_close(a, b, 1e-12)


def test_reconstruct_tp(files, capsys):
    code, out, _ = run(["reconstruct", "--records", _records(files, BS60, "0;1;1j", "--tp"), "--tp"], capsys)
    assert code == 0 and json.loads(out)["tp_assumed"]


def test_reconstruct_failures(files, capsys):
    assert run(["reconstruct", "--records", _records(files, probes="0;1;2;3;4;5")], capsys)[0] == 4
    path = _records(files)
    data = json.loads(open(path).read())
    data["records"][1]["Ybb"][0][0][0] -= 0.01
    assert run(["reconstruct", "--records", files("bad.json", data)], capsys)[0] == 5


def test_predict_identity_vacuum_peak(files, capsys):
    code, out, _ = run(["predict", "--channel", files("id.json", {"kind": "identity"}), "--grid", "0,0,1,3"], capsys)
    rows = read_csv(out)
    assert code == 0 and rows.shape == (9, 3)
    centre = rows[(rows[:, 0] == 0) & (rows[:, 1] == 0)][0]
    assert centre[2] == pytest.approx(1.0) and rows[:, 2].max() == centre[2]
    assert rows[1, 0] > rows[0, 0] and rows[1, 1] == rows[0, 1]


def test_predict_squeezed_oracle_matches_closed_form(files, capsys):
    chan = files("bs45.json", {"kind": "bs", "theta": np.pi / 4})
    code, out, _ = run(["predict", "--channel", chan, "--input", "squeezed:0.5,1", "--oracle", "--grid", "0.5,0,1,4"], capsys)
    rows = read_csv(out)
    closed = ch.bs_squeezed_output_form(np.pi / 4, 0.5, 1.0)
    expected = qform.evaluate_q_grid(closed, rows[:, 0] + 1j * rows[:, 1])
    assert code == 0 and np.max(np.abs(rows[:, 2] - expected)) < 1e-6


def test_predict_thermal_oracle_vs_analytic(files, capsys):
    chan = files("th.json", {"kind": "thermal", "nbar": 0.5})
    args = ["predict", "--channel", chan, "--input", "coherent:0.7-0.3i", "--grid", "0,0,1.4,5"]
    analytic = read_csv(run(args, capsys)[1])
    oracle = read_csv(run(args + ["--oracle"], capsys)[1])
    assert np.max(np.abs(analytic[:, 2] - oracle[:, 2])) < 1e-6


def test_predict_from_reconstruction(files, capsys):
    rep = files.dir / "rep.json"
    assert main(["reconstruct", "--records", _records(files), "--out", str(rep)]) == 0
    code, out, _ = run(["predict", "--channel", str(rep), "--input", "coherent:1", "--grid", "0.5,0,0.5,3"], capsys)
    rows = read_csv(out)
    assert code == 0 and rows[4, 2] == pytest.approx(1.0)


def test_predict_errors(files, capsys):
    two = files("id2.json", {"kind": "identity", "k": 2})
    assert run(["predict", "--channel", two], capsys)[0] == 3
    one = files("id.json", {"kind": "identity"})
    assert run(["predict", "--channel", one, "--input", "coherent:5", "--oracle", "--cutoff", "10"], capsys)[0] == 6
    assert run(["predict", "--channel", one, "--grid", "0,0,1,1"], capsys)[0] == 2
    assert run(["predict", "--channel", one, "--input", "fock:0,1"], capsys)[0] == 2
    assert run(["predict", "--channel", one, "--input", "fock:0,1", "--oracle"], capsys)[0] == 0


@pytest.mark.parametrize("channel", [BS60, {"kind": "identity"}])
def test_verify_passes(files, capsys, channel):
    code, out, _ = run(["verify", "--channel", files("c.json", channel)], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and {c["name"] for c in rep["checks"]} >= {"oracle_prediction", "tmss_fidelity"}


def test_verify_corrupted_records(files, capsys):
    path = _records(files)
    data = json.loads(open(path).read())
    data["records"][2]["d"][0][0] += 0.1
    code, out, err = run(["verify", "--channel", files("c.json", BS60), "--records", files("bad.json", data)], capsys)
    assert code == 1 and json.loads(out)["first_failure"] in err


def test_design(files, capsys):
    cands = [
        {"label": "real", "alphas": [[x, 0] for x in range(6)]},
        {"label": "default", "alphas": [[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1], [1, 1]]},
    ]
    code, out, _ = run(["design", "--candidates", files("cand.json", cands)], capsys)
    report = json.loads(out)["report"]
    assert code == 0 and report[0]["label"] == "default" and report[0]["rank"] == 1
    assert not report[1]["admissible"]
    from qptomo.tomo import default_probes

    k2 = [{"label": "k2", "alphas": qform.encode_complex(default_probes(2))}]
    assert json.loads(run(["design", "--candidates", files("k2.json", k2)], capsys)[1])["report"][0]["j_columns"] == 15
    assert run(["design", "--candidates", files("bad.json", [{"alphas": "x"}])], capsys)[0] == 2


def test_module_entry_point(files):
    res = subprocess.run([sys.executable, "-m", "qptomo", "probe", "--channel", files("bs.json", BS60)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and len(json.loads(res.stdout)["records"]) == 6 and res.stderr == ""


def test_verify_trace_preserving_records(files, capsys):
    recs = _records(files, BS60, "0;1;1j", "--tp")
    chan = files("c.json", BS60)
    assert run(["verify", "--channel", chan, "--records", recs], capsys)[0] == 1
    code, out, _ = run(["verify", "--channel", chan, "--records", recs, "--tp"], capsys)
    assert code == 0 and json.loads(out)["pass"]
