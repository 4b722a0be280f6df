import pytest

from invmet.cli import main


def _value(out: str, label: str) -> str:
    for line in out.splitlines():
        if line.startswith(label):
            return line[len(label):].strip()
    raise AssertionError(f"{label!r} missing from output:\n{out}")


def test_bounds_example(capsys):
    code = main(["bounds", "--profile", "power:2", "--delta", "0.01", "--xn", "1", "--xt", "0"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0] == "profile = power:2"
    assert _value(out, "comparison quantity") == "10"
    assert _value(out, "normal lower") == "5.5902"
    assert _value(out, "Sibony lower") == "3.5355"
    assert _value(out, "catalog upper").endswith("via D6")


def test_bounds_only_filter(capsys):
    code = main(["bounds", "--profile", "power:2", "--delta", "0.01", "--only", "bidisc"])
    out = capsys.readouterr().out
    assert code == 0
    assert _value(out, "bidisc lower") == "1"
    assert "Sibony lower" not in out


def test_bounds_reports_inapplicable_rows(capsys):
    code = main(["bounds", "--profile", "power:0.75", "--delta", "0.01", "--only", "theorem1"])
    assert code == 0
    assert _value(capsys.readouterr().out, "comparison quantity").startswith("n/a")


def test_bad_profile_literal_is_usage_error(capsys):
    assert main(["bounds", "--profile", "power:0"]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["bounds", "--frobnicate"]) == 2


def test_unknown_command(capsys):
    assert main(["plot"]) == 2
    assert main([]) == 2


def test_disc_verify_catalog(capsys):
    code = main(["disc", "verify", "--catalog", "D6", "--profile", "power:0.75", "--delta", "1e-4", "--xt", "0"])
    out = capsys.readouterr().out
    assert code == 0
    assert _value(out, "status") == "ok"
    assert _value(out, "samples") == "16384"


def test_disc_verify_out_of_regime_exits_3(capsys):
    code = main(["disc", "verify", "--catalog", "D1", "--profile", "power:2", "--delta", "0.01"])
    assert code == 3
    assert "D1" in capsys.readouterr().err


def test_disc_list(capsys):
    assert main(["disc", "list", "--profile", "power:2", "--delta", "0.01"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "D6"


def test_config_file_with_override(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("# run\nprofile = linear:1\ndelta = 0.04  # base point\n", encoding="utf-8")
    code = main(["bounds", "--config", str(path), "--delta", "0.01", "--only", "bidisc"])
    out = capsys.readouterr().out
    assert code == 0
    assert "profile = linear:1" in out.splitlines()
    assert "delta = 0.01" in out.splitlines()


def test_config_file_unknown_key(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("colour = blue\n", encoding="utf-8")
    assert main(["bounds", "--config", str(path)]) == 1
    assert "Unknown config key" in capsys.readouterr().err


def test_sweep_then_fit(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("INVMET_THREADS", "1")
    out_path = tmp_path / "sweep.csv"
    code = main(["sweep", "--profile", "power:2", "--deltas", "1e-4:1e-1:8", "--out", str(out_path)])
    assert code == 0
    assert out_path.read_text(encoding="utf-8").startswith("profile,beta_or_c0,delta,")
    capsys.readouterr()
    assert main(["fit", str(out_path)]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("closed_form")
    assert "slope -0.750000" in line


def test_sweep_is_byte_identical(tmp_path, monkeypatch):
    monkeypatch.setenv("INVMET_THREADS", "1")
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in paths:
        args = ["sweep", "--profile", "power:2", "--deltas", "0.01,0.02", "--estimators", "schwarz,sibony"]
        assert main(args + ["--out", str(path)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_sweep_replays_from_echoed_config(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("INVMET_THREADS", "1")
    first = tmp_path / "first.csv"
    args = ["sweep", "--profile", "power:2", "--deltas", "1e-3,1e-2", "--estimators", "closed_form,schwarz"]
    assert main(args + ["--out", str(first)]) == 0
    echoed = capsys.readouterr().out.split("\n\n", 1)[0].splitlines()
    assert "deltas = 1e-3,1e-2" in echoed
    assert "estimators = closed_form,schwarz" in echoed
    assert not any(line.startswith(("delta = ", "suite = ")) for line in echoed)
    config = tmp_path / "echo.cfg"
    config.write_text("\n".join(line for line in echoed if not line.startswith("out = ")) + "\n", encoding="utf-8")
    second = tmp_path / "second.csv"
    assert main(["sweep", "--config", str(config), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_config_file_drives_bounds_filter(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("profile = power:2\ndelta = 0.01\nonly = bidisc\n", encoding="utf-8")
    assert main(["bounds", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "only = bidisc" in out.splitlines()
    assert "Sibony lower" not in out


def test_fit_missing_file(tmp_path, capsys):
    assert main(["fit", str(tmp_path / "absent.csv")]) == 1
    assert capsys.readouterr().err.startswith("Error:")


def test_accept_catalog_quick(capsys):
    assert main(["accept", "--suite", "catalog", "--quick"]) == 0
    assert "catalog/admissibility" in capsys.readouterr().out


@pytest.mark.slow
def test_accept_all(tmp_path):
    assert main(["accept", "--suite", "all", "--seed", "42", "--out", str(tmp_path / "accept.csv")]) == 0
