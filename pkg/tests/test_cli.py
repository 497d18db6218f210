import json
import subprocess
import sys

import pytest

from compsearch.cli import main


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 2
    assert "invalid choice" in capsys.readouterr().err


def test_no_subcommand_prints_help(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_help_documents_credential_variable(capsys):
    with pytest.raises(SystemExit) as info:
        main(["loop", "--help"])
    assert info.value.code == 0
    assert "COMPSEARCH_API_KEY" in capsys.readouterr().out


def test_report_on_empty_run_dir(tmp_path, capsys):
    assert main(["report", "--run-dir", str(tmp_path)]) == 1
    assert "no evaluations" in capsys.readouterr().err


def test_bad_config_is_domain_error(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('kind = "optimizer"\n')
    assert main(["--config", str(cfg), "--run-dir", str(tmp_path / "r"), "baselines"]) == 1


def test_validate_single_file(tmp_path, capsys):
    good = tmp_path / "g.txt"
    good.write_text('component activation "g"\nexpr tanh(x)\n')
    bad = tmp_path / "b.txt"
    bad.write_text('component activation "b"\nexpr mu\n')
    assert main(["validate", str(good), "--run-dir", str(tmp_path / "r")]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True
    assert main(["validate", str(bad), "--run-dir", str(tmp_path / "r")]) == 1


def test_stagewise_commands(tmp_path, capsys):
    corpus = tmp_path / "c.txt"
    exprs = ["tanh(x)", "0 * x + 0.5", "sin(x)", "0.01 * x"]
    corpus.write_text("\n---\n".join(f'component activation "a{i}"\nexpr {e}' for i, e in enumerate(exprs)))
    cfg = tmp_path / "c.toml"
    cfg.write_text(f'corpus = "c.txt"\nbatch_size = 4\nruns = 1\ntasks = ["iris-cls"]\n'
                   f'window = 2\nrandom_shuffles = 3\ndiversity_k = 2\n')
    run = ["--run-dir", str(tmp_path / "run")]
    assert main(["--config", str(cfg), *run, "generate"]) == 0
    # later stages pick the configuration up from the run manifest
    for cmd in (["validate"], ["baselines"], ["evaluate"], ["reward"], ["train-ranker"], ["rank", "--top", "2"],
                ["efficiency"], ["select-diverse"], ["report"]):
        assert main([*run, *cmd]) == 0, cmd
    out = capsys.readouterr().out
    assert "Validator-PR: 0.7500" in out  # the constant candidate is rejected
    assert (tmp_path / "run" / "report.csv").exists()
    # flags after the subcommand work too
    assert main(["report", *run]) == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "compsearch", "report", "--run-dir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and "no evaluations" in proc.stderr
