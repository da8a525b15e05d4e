import csv
import json

import pytest

from b3rtdp.cli import EXIT_MODEL, EXIT_OK, EXIT_TIMEOUT, EXIT_USAGE, cli_main
from b3rtdp.domains import make_tag
from b3rtdp.pomdp_format import load_pomdp


def test_gen_solve_eval_tiger(tmp_path, capsys):
    model, pol, log, rep = (tmp_path / n for n in ("t.pomdp", "t.policy", "t.jsonl", "r.json"))
    assert cli_main(["gen", "--domain", "tiger", "--out", str(model)]) == EXIT_OK
    assert cli_main(["solve", "--model", str(model), "-D", "20", "--out", str(pol),
                     "--log", str(log)]) == EXIT_OK
    recs = [json.loads(l) for l in log.read_text().splitlines()]
    assert recs and recs[-1]["trial"] == len(recs)
    assert cli_main(["eval", "--model", str(model), "--policy", str(pol), "--runs", "50",
                     "--out", str(rep)]) == EXIT_OK
    out = json.loads(rep.read_text())
    assert out["runs"] == 50 and out["mean"] > 0 and not out["heuristic_only"]


def test_gen_tag_solve_capped_eval(tmp_path):
    model, pol, rep = tmp_path / "tag.pomdp", tmp_path / "tag.policy", tmp_path / "r.csv"
    assert cli_main(["gen", "--domain", "tag", "--out", str(model)]) == EXIT_OK
    assert load_pomdp(model).n_states == make_tag().n_states
    code = cli_main(["solve", "--model", str(model), "--time-limit", "2", "--out", str(pol)])
    assert code in (EXIT_OK, EXIT_TIMEOUT)
    assert cli_main(["eval", "--model", str(model), "--policy", str(pol), "--runs", "5",
                     "--horizon", "20", "--format", "csv", "--out", str(rep)]) == EXIT_OK
    (row,) = list(csv.DictReader(rep.open()))
    assert row["runs"] == "5"


def test_usage_errors(tmp_path, capsys):
    assert cli_main(["eval", "--domain", "tiger", "--policy", "x", "--runs", "1"]) == EXIT_USAGE
    assert cli_main(["solve", "--domain", "tiger"]) == EXIT_USAGE
    assert cli_main(["solve", "--domain", "tiger", "--bogus", "--out", "x"]) == EXIT_USAGE
    assert cli_main(["solve", "--domain", "tiger", "--model", "m", "--out", "x"]) == EXIT_USAGE
    assert cli_main([]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_model_errors(tmp_path):
    out = str(tmp_path / "p")
    assert cli_main(["solve", "--model", str(tmp_path / "missing.pomdp"), "--out", out]) == EXIT_MODEL
    bad = tmp_path / "bad.pomdp"
    bad.write_text("states: 2\n")
    assert cli_main(["solve", "--model", str(bad), "--out", out]) == EXIT_MODEL
    assert cli_main(["gen", "--domain", "nowhere"]) == EXIT_MODEL
    assert cli_main(["solve", "--domain", "tiger", "--alpha", "0.3", "--out", out]) == EXIT_MODEL


def test_solve_timeout_exit_code(tmp_path):
    assert cli_main(["solve", "--domain", "tag", "--time-limit", "0.5",
                     "--out", str(tmp_path / "p")]) == EXIT_TIMEOUT


def test_sweep_emits_six_rows(tmp_path):
    out = tmp_path / "sweep.csv"
    assert cli_main(["sweep", "--domain", "tiger", "--runs", "10", "--format", "csv",
                     "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 6
    assert list(rows[0]) == ["domain", "D", "alpha", "epsilon", "beta", "tau", "seed", "adr_mean",
                             "adr_ci95", "time_ms", "trials", "table_records"]


def test_anytime_json(tmp_path):
    out = tmp_path / "any.jsonl"
    assert cli_main(["anytime", "--domain", "tiger", "-D", "20", "--checkpoints", "0", "100",
                     "--runs", "10", "--out", str(out)]) == EXIT_OK
    recs = [json.loads(l) for l in out.read_text().splitlines()]
    assert [r["heuristic_only"] for r in recs] == [True, False]
