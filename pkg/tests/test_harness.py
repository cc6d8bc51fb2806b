import json
import math
import os

import numpy as np
import pytest

from robinsym.cli import main as cli_main
from robinsym.config import ConfigError, default_config_text, parse_config
from robinsym.runner import all_passed, emit_reports, enumerate_jobs, run_experiments

MINIMAL = """\
[run]
domains = disc r=1
betas = 1
ks = 1
sources = const
theorems = saint_venant
h = 0.15
refinements = 1

[gamma]
gamma2 = 16.0
provenance = suite default, validated against the gamma_star diagnostic

[output]
dir = reports
"""


def test_minimal_config_valid():
    cfg = parse_config(MINIMAL)
    assert cfg.domains == ["disc r=1"]
    assert cfg.gamma2 == 16.0
    assert cfg.theorems == ["saint_venant"]


def test_default_config_parses():
    cfg = parse_config(default_config_text())
    assert len(cfg.domains) == 2


def test_duplicate_key_names_line():
    text = MINIMAL.replace("h = 0.15\n", "h = 0.15\nh = 0.2\n")
    with pytest.raises(ConfigError, match="line 8"):
        parse_config(text)


def test_unknown_key_names_line():
    text = MINIMAL.replace("h = 0.15", "hh = 0.15")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(text)


def test_missing_provenance_rejected():
    text = MINIMAL.replace(
        "provenance = suite default, validated against the gamma_star diagnostic\n", "")
    with pytest.raises(ConfigError, match="provenance"):
        parse_config(text)


def test_k_out_of_range_cites_bound():
    text = MINIMAL.replace("ks = 1", "ks = 2").replace("sources = const",
                                                       "sources = radial")
    text = text.replace("theorems = saint_venant", "theorems = lorentz_k1")
    with pytest.raises(ConfigError, match=r"0 < k <= n/\(2n-2\)"):
        parse_config(text)
    # with f = 1 the range extends and k = 2 is accepted
    ok = MINIMAL.replace("ks = 1", "ks = 2").replace("theorems = saint_venant",
                                                     "theorems = lorentz_k1")
    assert parse_config(ok).ks == [2.0]


def test_job_enumeration_deterministic():
    cfg = parse_config(MINIMAL.replace("domains = disc r=1",
                                       "domains = disc r=1; rect w=2 h=0.5"))
    jobs = enumerate_jobs(cfg)
    assert [j.index for j in jobs] == list(range(len(jobs)))
    assert len(jobs) == 2


def test_disc_run_all_pass_and_isolation(tmp_path):
    text = MINIMAL.replace("domains = disc r=1", "domains = disc r=1; disc r=-1")
    cfg = parse_config(text)
    rows = run_experiments(cfg)
    assert rows[0].status == "ok" and rows[0].report.passed
    assert rows[1].status == "failed" and "GeometryError" in rows[1].error
    assert not all_passed(rows)


def test_emit_reports_structure_and_determinism(tmp_path):
    cfg = parse_config(MINIMAL)
    rows = run_experiments(cfg)
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    emit_reports(rows, str(out1))
    rows2 = run_experiments(parse_config(MINIMAL))
    emit_reports(rows2, str(out2))
    names = sorted(os.listdir(out1))
    assert names == sorted(os.listdir(out2))
    for name in names:
        with open(out1 / name, "rb") as f1, open(out2 / name, "rb") as f2:
            assert f1.read() == f2.read(), name
    summary = (out1 / "summary.txt").read_text().strip().split("\n")
    assert len(summary) == 1 + len(rows)
    payload = json.loads((out1 / "job_000.json").read_text())
    assert payload["status"] == "ok"
    assert payload["report"]["theorem"] == "saint_venant"


def test_plot_data_sorted(tmp_path):
    text = MINIMAL.replace("domains = disc r=1",
                           "domains = rect w=2 h=0.5; disc r=1; stadium l=1 r=0.5")
    rows = run_experiments(parse_config(text))
    emit_reports(rows, str(tmp_path))
    lines = (tmp_path / "plot_gap_vs_alpha2.txt").read_text().strip().split("\n")
    xs = [float(line.split()[0]) for line in lines[1:]]
    assert xs == sorted(xs)
    assert len(xs) == 3


def test_cli_oracle_and_asymmetry(capsys):
    assert cli_main(["oracle", "--R", "1", "--beta", "1", "--kind", "torsion"]) == 0
    out = capsys.readouterr().out
    assert f"{5 * math.pi / 8:.10g}"[:10] in out
    assert cli_main(["oracle", "--kind", "eigen"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("lambda=1.57")
    assert cli_main(["asymmetry", "--domain", "rect w=1 h=1",
                     "--resolution", "256"]) == 0
    out = capsys.readouterr().out
    assert "asymmetry=0.18" in out


def test_cli_mesh_and_solve_roundtrip(tmp_path, capsys):
    mesh_path = tmp_path / "m.txt"
    assert cli_main(["mesh", "--domain", "disc r=1", "--h", "0.2",
                     "--out", str(mesh_path)]) == 0
    capsys.readouterr()
    assert cli_main(["mesh", "--import", str(mesh_path), "--refine", "1",
                     "--out", str(tmp_path / "m2.txt")]) == 0
    capsys.readouterr()
    field_path = tmp_path / "u.txt"
    assert cli_main(["solve", "--domain", "disc r=1", "--h", "0.1", "--beta", "1",
                     "--out", str(field_path)]) == 0
    out = capsys.readouterr().out
    assert "u_max=0.75" in out
    text = field_path.read_text().split("\n")
    assert text[0].startswith("nodes ")


def test_parallel_workers_match_sequential():
    text = MINIMAL.replace("domains = disc r=1",
                           "domains = disc r=1; rect w=2 h=0.5")
    seq = run_experiments(parse_config(text))
    par = run_experiments(parse_config(text.replace("refinements = 1",
                                                    "refinements = 1\nworkers = 3")))
    assert len(seq) == len(par)
    for a, b in zip(seq, par):
        assert a.job.index == b.job.index
        assert a.report.lhs_gap == b.report.lhs_gap
        assert a.report.margin == b.report.margin


def test_cli_verify_exit_code(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(MINIMAL)
    code = cli_main(["verify", "--config", str(cfg_path),
                     "--out", str(tmp_path / "rep")])
    assert code == 0
    assert (tmp_path / "rep" / "summary.txt").exists()


def test_cli_mesh_requires_input():
    with pytest.raises(SystemExit):
        cli_main(["mesh", "--h", "0.2"])


def test_cross_process_determinism(tmp_path):
    # byte-identity must hold across interpreter invocations, not just reruns
    # inside one process (caches could otherwise leak state into reports)
    import subprocess
    import sys
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(MINIMAL)
    for sub in ("p1", "p2"):
        res = subprocess.run(
            [sys.executable, "-m", "robinsym.cli", "verify", "--config",
             str(cfg_path), "--out", str(tmp_path / sub)],
            capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
    for name in sorted(os.listdir(tmp_path / "p1")):
        a = (tmp_path / "p1" / name).read_bytes()
        b = (tmp_path / "p2" / name).read_bytes()
        assert a == b, name
