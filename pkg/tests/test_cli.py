import json

from crossedlab.cli import main


def _cfg(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_specrad_default(tmp_path, capsys):
    assert main(["specrad", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == 1 and doc["seed"] == 0
    assert doc["report"]["report"]["estimate"] == 2


def test_growth_heisenberg(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[group]\nkind = heisenberg\n[params]\nn_max = 14\n"
                         "expect_degree_min = 3.6\nexpect_degree_max = 4.4\n")
    assert main(["growth", "--config", cfg, "--json"]) == 0
    deg = json.loads(capsys.readouterr().out)["report"]["growth"]["degree"]
    assert 3.6 <= deg <= 4.4


def test_verify_schwartz(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[algebra]\nkind = schwartz_Z\nN = 10\n[params]\nchains = 60\n")
    assert main(["verify", "--config", cfg, "--json"]) == 0
    s = json.loads(capsys.readouterr().out)["report"]["strong_spectral_invariance"]
    assert s["C"] == 1 and s["D"] == [1, 1, 1, 1, 1] and s["p"] == [0, 1, 2, 3, 4]


def test_failed_expectation_exits_1(tmp_path):
    cfg = _cfg(tmp_path, "[params]\nexpect = 3\nn_max = 8\n")
    assert main(["specrad", "--config", cfg, "--quiet"]) == 1


def test_errors_exit_2(tmp_path, capsys):
    assert main(["nope"]) == 2
    bad = _cfg(tmp_path, "this is not ini\n")
    assert main(["specrad", "--config", bad]) == 2
    lit = _cfg(tmp_path, "[params]\nelement = [[1, \n", "lit.ini")
    assert main(["specrad", "--config", lit]) == 2
    assert main(["specrad", "--config", str(tmp_path / "missing.ini")]) == 2
    assert "error" in capsys.readouterr().err


def test_same_seed_byte_identical(tmp_path):
    cfg = _cfg(tmp_path, "[experiment]\nname = sk\nseed = 11\n[params]\nchains = 20\nn_max = 3\nq_max = 2\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["smoothk", "--config", cfg, "--out", str(a), "--quiet"]) == 0
    assert main(["smoothk", "--config", cfg, "--out", str(b), "--quiet"]) == 0
    assert (a / "sk.json").read_bytes() == (b / "sk.json").read_bytes()
    assert "timestamp" not in json.loads((a / "sk.json").read_text())
    assert "timestamp" in json.loads((a / "sk.meta.json").read_text())


def test_seed_override_and_csv(tmp_path):
    out = tmp_path / "o"
    assert main(["specrad", "--seed", "7", "--out", str(out), "--csv", "--quiet"]) == 0
    doc = json.loads((out / "specrad.json").read_text())
    assert doc["seed"] == 7
    lines = (out / "specrad.csv").read_text().splitlines()
    assert lines[0] == "n,value" and len(lines) == 65


def test_text_summary(capsys):
    assert main(["pytlik"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "experiment: pytlik" and "limsup: 4" in out and out[-1] == "verdict: pass"


def test_other_subcommands(capsys):
    for sub in ("wiener", "derivation", "cstar"):
        assert main([sub, "--quiet"]) == 0
