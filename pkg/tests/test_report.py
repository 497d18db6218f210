import pytest

from compsearch.report import NoEvaluations, build_report, read_report_csv, write_report
from compsearch.store import RunDir


def passed(ok):
    return {"passed": ok, "checks": []}


def fake_run(root, kind, style, n_total, n_pass, rewards):
    run = RunDir(root)
    hyps = []
    for i in range(n_total):
        hyps.append({"id": f"{kind}{style}{i}", "kind": kind, "prompt_style": style, "iteration": 1, "index": i,
                     "validator_report": passed(i < n_pass), "duplicate": False})
    run.append("hypotheses", hyps)
    run.append("rewards", [{"hypothesis_id": f"{kind}{style}{i}", "b_wr": b, "bsota_wr": s, "reward": b + s,
                            "coverage": 1.0} for i, (b, s) in enumerate(rewards)])


def test_table_layout(tmp_path):
    fake_run(tmp_path / "a", "activation", "NEP", 500, 217, [(0.5, 0.25), (0.53, 0.2502)])
    fake_run(tmp_path / "b", "activation", "IEP", 4, 4, [(0.1, 0.0)])
    fake_run(tmp_path / "c", "regularizer", "IEP", 2, 1, [(0.4, 0.3)])
    table = build_report([tmp_path / "a", tmp_path / "b", tmp_path / "c"])
    row = table.row("activation", "NEP")
    assert row.validator_pr == 0.434
    assert row.mean_b_wr == pytest.approx(0.515) and row.mean_bsota_wr == pytest.approx(0.2501)
    text = table.render()
    lines = text.splitlines()
    header = lines[0]
    assert header.split() == ["Component", "Inc", "Nov"]
    nov_col = header.index("Nov")
    line = next(li for li in lines if "Validator-PR: 0.4340" in li)
    assert line.index("Validator-PR: 0.4340") == nov_col
    assert lines[2].startswith("Activation")
    assert any(li.startswith("Regularizer") for li in lines)
    assert "B-WR: 0.5150" in text and "BSOTA-WR: 0.2501" in text


def test_single_hypothesis_and_csv_round_trip(tmp_path):
    fake_run(tmp_path, "preprocessor", "IEP", 1, 1, [(0.2, 0.1)])
    table = build_report(tmp_path)
    assert len(table.rows) == 1 and len(table.scatter) == 1
    write_report(tmp_path, table)
    assert tuple(read_report_csv(tmp_path / "report.csv")) == table.rows
    scatter = (tmp_path / "scatter.csv").read_text().splitlines()
    assert scatter[0] == "hypothesis_id,kind,prompt_style,b_wr,bsota_wr"


def test_empty(tmp_path):
    with pytest.raises(NoEvaluations):
        build_report(tmp_path)
