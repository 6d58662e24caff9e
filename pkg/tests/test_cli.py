import json
import math
import os
import shutil
import subprocess
import sys

import pytest

from ril.cli import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, family_to_json, main
from ril.random_model import MeasuredFamily

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FAM = os.path.join(ROOT, "families")


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(argv, capsys):
    code, out, err = run(argv, capsys)
    return code, json.loads(out) if out else None, err


def fam(name):
    return os.path.join(FAM, name)


def write_family(path, polys, **extra):
    obj = family_to_json(MeasuredFamily.from_polys(polys))
    obj.update(extra)
    path.write_text(json.dumps(obj))
    return str(path)


def test_constants_sq3_sq5(capsys):
    code, out, _ = run_json(["constants", "--family", fam("sq3_sq5.json")], capsys)
    assert code == EXIT_OK
    assert out["B_S"] == pytest.approx(math.log(10), rel=1e-15)
    assert out["B_S_exact"] == "ln:10" and out["d_S"] == 2


def test_log_base_rescales_either_position(capsys):
    _, a, _ = run_json(["--log-base", "10", "constants", "--family", fam("sq3_sq5.json")], capsys)
    _, b, _ = run_json(["constants", "--family", fam("sq3_sq5.json"), "--log-base", "10"], capsys)
    assert a == b
    assert a["B_S"] == pytest.approx(1.0, rel=1e-14) and a["log_base"] == 10.0


def test_orbit_closure_five_map(capsys):
    code, out, _ = run_json(["orbit-closure", "--family", fam("five_map.json"), "--point", "0"], capsys)
    assert code == EXIT_OK
    assert out["verdict"] == "Finite" and out["set"] == ["-1", "0", "1"]


def test_orbit_closure_unknown_exit_code(tmp_path, capsys):
    path = write_family(tmp_path / "cubic.json", [[0, 0, -2, 1]])
    code, out, _ = run_json(["orbit-closure", "--family", path, "--point", "3", "--max-depth", "3"],
                            capsys)
    assert code == EXIT_NEGATIVE and out["verdict"] == "Unknown"


def test_simulate_byte_identical(tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        code, _, _ = run(["simulate", "--family", fam("sq1_cube.json"), "--point", "3", "--trials", "8",
                          "--depth", "200", "--seed", "42", "--out", str(path)], capsys)
        assert code == EXIT_OK
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_simulate_trace_csv(tmp_path, capsys):
    csv = tmp_path / "trace.csv"
    code, _, _ = run(["simulate", "--family", fam("sq1_cube.json"), "--point", "3", "--trials", "2",
                      "--depth", "50", "--seed", "1", "--trace-csv", str(csv)], capsys)
    assert code == EXIT_OK
    lines = csv.read_text().splitlines()
    assert lines[0] == "n,log_deg,log_height,engine,error_bound" and len(lines) == 52


def test_simulate_requires_seed(capsys):
    with pytest.raises(SystemExit):
        main(["simulate", "--family", fam("sq1_cube.json"), "--point", "3"])


@pytest.mark.parametrize("argv", [
    ["escape-cert", "--family", fam("sq3_sq5.json"), "--point", "0"],
    ["orbit-closure", "--family", fam("sq1.json"), "--point", "0"],
    ["orbit-closure", "--family", fam("five_map.json"), "--point", "0"],
    ["galois", "tower", "--family", fam("sq1.json"), "--prefix", "0,0,0,0", "--depth", "4"],
])
def test_certificates_round_trip(argv, tmp_path, capsys):
    cert = tmp_path / "cert.json"
    code, _, _ = run(argv + ["--out", str(cert)], capsys)
    assert code == EXIT_OK
    code, out, _ = run_json(["verify", "--cert", str(cert)], capsys)
    assert code == EXIT_OK and out["valid"] is True


def test_tampered_certificates_fail(tmp_path, capsys):
    cert = tmp_path / "cert.json"
    run(["escape-cert", "--family", fam("sq3_sq5.json"), "--point", "0", "--out", str(cert)], capsys)
    data = json.loads(cert.read_text())
    data["witnesses"][0]["value"] = "13"
    cert.write_text(json.dumps(data))
    code, out, _ = run_json(["verify", "--cert", str(cert)], capsys)
    assert code == EXIT_NEGATIVE and out["valid"] is False

    run(["galois", "tower", "--family", fam("sq1.json"), "--prefix", "0,0,0", "--depth", "3",
         "--out", str(cert)], capsys)
    data = json.loads(cert.read_text())
    data["levels"][2]["maximality"]["prime"] = "7"
    cert.write_text(json.dumps(data))
    code, out, _ = run_json(["verify", "--cert", str(cert)], capsys)
    assert code == EXIT_NEGATIVE and out["valid"] is False


def test_escape_not_certified_exit_code(tmp_path, capsys):
    path = write_family(tmp_path / "m1.json", [[-1, 0, 1]])
    code, out, _ = run_json(["escape-cert", "--family", path, "--point", "0", "--r-max", "6"], capsys)
    assert code == EXIT_NEGATIVE and out["status"] == "NotCertified"


def test_galois_tower_undetermined_exit_code(capsys):
    code, out, _ = run_json(["galois", "tower", "--family", fam("sq1.json"), "--prefix", "0,0",
                             "--depth", "2"], capsys)
    assert code == EXIT_NEGATIVE
    assert out["levels"][1]["maximality"]["status"] == "Undetermined"
    assert out["levels"][1]["abs_disc"] == "512"


def test_ff_check(capsys):
    code, out, _ = run_json(["galois", "ff-check", "--family", fam("ff_example.json"), "--seed", "3",
                             "--sequences", "3", "--depth", "4"], capsys)
    assert code == EXIT_OK and out["passed"] is True and len(out["towers"]) == 3


def test_monoid_count(capsys):
    code, out, _ = run_json(["monoid-count", "--weights", "ln:2,ln:3", "--bound", "ln:100"], capsys)
    assert code == EXIT_OK and out["count"] == 20


def test_monoid_sandwich(capsys):
    code, out, _ = run_json(["monoid-count", "--family", fam("monomial_2_3.json"), "--point", "5",
                             "--log-bound", "12"], capsys)
    assert code == EXIT_OK and out["lower"] <= out["middle"] <= out["upper"]


def test_orbit_count(capsys):
    code, out, _ = run_json(["orbit-count", "--family", fam("sq1.json"), "--point", "3",
                             "--log-bound", "20", "--depth", "60", "--seed", "1"], capsys)
    assert code == EXIT_OK
    # h(gamma_n(3)) ~ 2^n ln 3 stays within e^20 up to n ~ 28
    assert 27 <= out["counts"][0] <= 29


def test_unknown_field_rejected(tmp_path, capsys):
    path = write_family(tmp_path / "bad.json", [[1, 0, 1]], colour="red")
    code, _, err = run(["constants", "--family", path], capsys)
    assert code == EXIT_ERROR and "colour" in err


def test_bad_json_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"version": 1,\n "maps": [}\n')
    code, _, err = run(["constants", "--family", str(path)], capsys)
    assert code == EXIT_ERROR and "2:" in err


def test_wrong_version_rejected(tmp_path, capsys):
    path = tmp_path / "v2.json"
    path.write_text(json.dumps({"version": 2, "maps": []}))
    code, _, err = run(["constants", "--family", str(path)], capsys)
    assert code == EXIT_ERROR and "version" in err


@pytest.mark.skipif(shutil.which("ril") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["ril", "constants", "--family", fam("sq1.json")], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["B_S_exact"] == "ln:2"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ril.cli", "constants", "--family", fam("sq1.json")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["d_S"] == 2
