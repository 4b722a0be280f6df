from dataclasses import fields
from pathlib import Path

import pytest

from invmet.config import THREADS_ENV, RunConfig, build_run_config, load_config_file, load_threads


def test_threads_default(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert load_threads() >= 1


def test_threads_from_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert load_threads() == 3


@pytest.mark.parametrize("raw", ["zero", "0", "-2"])
def test_threads_invalid(monkeypatch, raw):
    monkeypatch.setenv(THREADS_ENV, raw)
    with pytest.raises(RuntimeError, match=THREADS_ENV):
        load_threads()


def test_config_file_coercion(tmp_path: Path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "\n".join(
            [
                "# comment",
                "profile = power:0.75",
                "delta = 1e-3",
                "xt = 0.5+0.5j",
                "gamma = none",
                "seed = 7",
                "timing = yes",
                "",
            ]
        ),
        encoding="utf-8",
    )
    values = load_config_file(path)
    assert values == {
        "profile": "power:0.75",
        "delta": 1e-3,
        "xt": 0.5 + 0.5j,
        "gamma": None,
        "seed": 7,
        "timing": True,
    }


def test_config_file_errors(tmp_path: Path):
    path = tmp_path / "run.cfg"
    path.write_text("delta 0.1\n", encoding="utf-8")
    with pytest.raises(RuntimeError, match="key=value"):
        load_config_file(path)
    path.write_text("delta = small\n", encoding="utf-8")
    with pytest.raises(RuntimeError, match="invalid value"):
        load_config_file(path)


def test_flags_override_file_values():
    config = build_run_config({"delta": 0.04, "seed": 1}, {"delta": 0.01, "seed": None, "quick": True})
    assert config.delta == 0.01
    assert config.seed == 1


def test_echo_lines_cover_every_field():
    lines = RunConfig().echo_lines()
    assert lines[0] == "profile = power:2"
    assert "seed = 42" in lines
    assert {line.split(" = ")[0] for line in lines} == {f.name for f in fields(RunConfig)}


def test_echoed_sweep_config_reproduces_the_run(tmp_path: Path):
    keys = ("profile", "deltas", "delta0", "xn", "xt", "gamma", "estimators", "seed", "out", "timing")
    config = build_run_config(
        {},
        {"profile": "power:0.75", "deltas": "1e-3,1e-2", "estimators": "closed_form,schwarz", "xt": 0.5j, "timing": True},
    )
    lines = config.echo_lines(keys)
    assert "deltas = 1e-3,1e-2" in lines
    assert "estimators = closed_form,schwarz" in lines
    assert not any(line.startswith("delta = ") for line in lines)
    path = tmp_path / "echo.cfg"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    replayed = build_run_config(load_config_file(path), {})
    assert replayed.echo_lines(keys) == lines
    assert replayed == config


def test_config_file_sets_command_options(tmp_path: Path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "only = bidisc,sibony\ncatalog = D6\ncenters = 50\nquick = on\nkappa2 = false\nindicatrix = 8\n",
        encoding="utf-8",
    )
    assert load_config_file(path) == {
        "only": "bidisc,sibony",
        "catalog": "D6",
        "centers": 50,
        "quick": True,
        "kappa2": False,
        "indicatrix": 8,
    }
