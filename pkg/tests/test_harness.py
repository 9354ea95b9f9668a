import json
from pathlib import Path

import pytest

from rde.cli import main
from rde.errors import InvalidArgumentError
from rde.harness import TrialBatch, ideal_summary, oracle_check, run_batch


class TestOracleCheck:
    def test_random_instances_pass(self):
        ledger = oracle_check(count=30, seed=1)
        assert ledger["ok"]
        assert ledger["dual_gap"] < 1e-7
        assert ledger["fdp_examples_ok"]

    def test_deterministic(self):
        assert oracle_check(10, 5) == oracle_check(10, 5)


class TestBatches:
    def test_zero_seeds(self):
        summary = run_batch(TrialBatch(scenario="ex1", n=16, seeds=0))
        assert summary["trials"] == 0
        assert summary["failure_rate"] == 0.0

    def test_summary_totals_match_rows(self):
        summary = run_batch(TrialBatch(scenario="ex1", n=16, delta="1/4",
                                       seeds=6, monitor="off"))
        rows = summary["rows"]
        assert summary["total_bits"] == sum(r["total_bits"] for r in rows)
        assert summary["failures"] == sum(r["failed"] for r in rows)

    def test_byte_identical_reports(self, tmp_path):
        spec = dict(scenario="ex1", n=16, delta="1/4", seeds=5,
                    master_seed=3, monitor="auto")
        run_batch(TrialBatch(out=str(tmp_path / "a"), **spec))
        run_batch(TrialBatch(out=str(tmp_path / "b"), **spec))
        for ext in (".json", ".csv"):
            assert (tmp_path / f"a{ext}").read_bytes() == \
                   (tmp_path / f"b{ext}").read_bytes()

    def test_sk_mode_summary(self):
        summary = run_batch(TrialBatch(scenario="ex1", n=32, delta="1/4",
                                       seeds=4, monitor="off", mode="sk"))
        assert summary["capacity"] == pytest.approx(0.5, abs=1e-9)
        assert 0.0 <= summary["agreement_rate"] <= 1.0

    def test_bad_mode(self):
        with pytest.raises(InvalidArgumentError):
            run_batch(TrialBatch(scenario="ex1", n=16, mode="osmosis"))

    def test_unwritable_output(self):
        with pytest.raises(InvalidArgumentError):
            run_batch(TrialBatch(scenario="ex1", n=16, seeds=1,
                                 monitor="off",
                                 out="/nonexistent-dir/report"))

    def test_ideal_summary_shape(self):
        out = ideal_summary("ex2")
        assert out["violations"] == []
        assert out["terminal_sum"] == pytest.approx(3.1657842846620854,
                                                    abs=1e-9)


class TestCli:
    def test_region(self, capsys):
        assert main(["region", "--scenario", "ex1"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["sk_capacity"] == pytest.approx(0.5)

    def test_ideal(self, capsys):
        assert main(["ideal", "--scenario", "ex3"]) == 0
        assert json.loads(capsys.readouterr().out)["violations"] == []

    def test_exchange_writes_reports(self, tmp_path, capsys):
        code = main(["exchange", "--scenario", "ex1", "--n", "16",
                     "--delta", "1/4", "--seeds", "3", "--monitor", "off",
                     "--out", str(tmp_path / "r")])
        assert code == 0
        assert (tmp_path / "r.json").exists()
        assert (tmp_path / "r.csv").exists()

    def test_multi_n_suffixes_outputs(self, tmp_path, capsys):
        main(["exchange", "--scenario", "ex1", "--n", "8", "16",
              "--delta", "1/2", "--seeds", "2", "--monitor", "off",
              "--out", str(tmp_path / "r")])
        assert (tmp_path / "r-n8.csv").exists()
        assert (tmp_path / "r-n16.csv").exists()

    def test_sk_command(self, capsys):
        assert main(["sk", "--scenario", "ex1", "--n", "32",
                     "--delta", "1/4", "--seeds", "2", "--monitor", "off",
                     "--dkey", "0.2"]) == 0

    def test_oracle_check_command(self, capsys):
        assert main(["oracle-check", "--count", "5"]) == 0

    def test_unknown_scenario_fails_cleanly(self, capsys):
        assert main(["region", "--scenario", "nope"]) == 2

    def test_scenario_file(self, tmp_path, capsys):
        path = tmp_path / "pair.json"
        path.write_text(json.dumps({
            "name": "pair", "sizes": [2, 2],
            "pmf": {"0,0": "1/2", "1,1": "1/2"}}))
        assert main(["region", "--scenario", str(path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["sk_capacity"] == pytest.approx(1.0)
