import json
import shutil

import pytest

from refgame.agents import export_payoffs, payoff_summary
from refgame.cli import main
from refgame.protocols import load_config, run_scenario

SCENARIOS = ["matmul_contract", "matmul_competition", "gcd_incentive"]


@pytest.fixture
def scenario(fixtures_dir):
    return lambda name: str(fixtures_dir / f"{name}.json")


@pytest.mark.parametrize("name", SCENARIOS)
def test_bundled_scenarios(name, scenario, tmp_path, capsys):
    assert main(["run", scenario(name), "--out", str(tmp_path / "o")]) == 0
    report = (tmp_path / "o" / "report.txt").read_text()
    assert "accepted_correct|true" in report and "conserved|true" in report
    assert "accepted|S:" in capsys.readouterr().out


def test_contract_report_contents(scenario, tmp_path):
    main(["run", scenario("matmul_contract"), "--out", str(tmp_path)])
    lines = (tmp_path / "report.txt").read_text().splitlines()
    assert lines[:4] == ["scenario|matmul-contract", "seed|7", "protocol|contract", "status|ok"]
    assert "accepted|S:P2" in lines
    assert sorted(p.name for p in tmp_path.glob("transcript_*.txt")) == ["transcript_001.txt"]


def test_same_seed_identical(scenario, tmp_path):
    for d in ("a", "b"):
        assert main(["run", scenario("matmul_competition"), "--seed", "11", "--out", str(tmp_path / d)]) == 0
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_default_out_dir(scenario, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    main(["run", scenario("matmul_contract")])
    assert (tmp_path / "matmul-contract-seed7" / "report.txt").exists()


def edited(scenario, tmp_path, name, change):
    cfg = json.loads(open(scenario(name)).read())
    change(cfg)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_missing_instance_file(scenario, tmp_path, capsys):
    def drop(cfg):
        cfg["task"]["instance_file"] = "nowhere.txt"
    assert main(["run", edited(scenario, tmp_path, "matmul_contract", drop)]) == 2
    assert "task.instance_file" in capsys.readouterr().err


def test_invalid_field(scenario, tmp_path, capsys):
    def bad(cfg):
        cfg["agents"][0]["funds"] = "lots"
    assert main(["run", edited(scenario, tmp_path, "matmul_contract", bad)]) == 2
    assert "agents.0.funds" in capsys.readouterr().err


def test_unknown_key(scenario, tmp_path, capsys):
    def extra(cfg):
        cfg["task"]["colour"] = "red"
    assert main(["run", edited(scenario, tmp_path, "matmul_contract", extra)]) == 2
    assert "task.colour" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert main([]) == 2
    assert main(["batch", "x.json"]) == 2
    assert main(["run", "/nonexistent.json"]) == 2


def test_fixture_override(scenario, tmp_path, monkeypatch, fixtures_dir):
    (tmp_path / "cfg").mkdir()
    (tmp_path / "fx").mkdir()
    cfg = shutil.copy(scenario("matmul_contract"), tmp_path / "cfg")
    monkeypatch.setenv("REFGAME_FIXTURES", str(tmp_path / "fx"))
    assert main(["run", str(cfg), "--out", str(tmp_path / "o0")]) == 2
    shutil.copy(fixtures_dir / "matmul_3.txt", tmp_path / "fx")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 0


class TestBatch:
    def test_single_run_matches_report(self, scenario, tmp_path):
        out = tmp_path / "t.txt"
        assert main(["batch", scenario("matmul_competition"), "--runs", "1", "--seed-base", "5",
                     "--out", str(out)]) == 0
        rep = run_scenario(load_config(scenario("matmul_competition")), 5)
        assert out.read_text() == export_payoffs(payoff_summary(rep.payoffs))

    def test_fixed_seed_base(self, scenario, tmp_path):
        for name in ("a", "b"):
            main(["batch", scenario("matmul_competition"), "--runs", "4", "--seed-base", "9",
                  "--out", str(tmp_path / name)])
        assert (tmp_path / "a").read_text() == (tmp_path / "b").read_text()

    def test_both_policies(self, scenario, tmp_path):
        out = tmp_path / "t.txt"
        main(["batch", scenario("matmul_competition"), "--runs", "100", "--out", str(out)])
        rows = {tuple(l.split("|")[:2]) for l in out.read_text().splitlines()[1:]}
        assert {("prover", "honest"), ("prover", "corrupt(flip_entry)")} <= rows

    def test_zero_runs(self, scenario):
        assert main(["batch", scenario("matmul_competition"), "--runs", "0"]) == 2


class TestVerify:
    @pytest.fixture
    def transcript(self, scenario, tmp_path):
        main(["run", scenario("matmul_contract"), "--out", str(tmp_path / "o")])
        return tmp_path / "o" / "transcript_001.txt"

    def test_confirmed(self, transcript, capsys):
        assert main(["verify", str(transcript)]) == 0
        assert capsys.readouterr().out.splitlines()[-1] == "confirmed"

    def test_tampered(self, transcript, capsys):
        lines = transcript.read_text().splitlines()
        k = next(i for i, l in enumerate(lines) if l.startswith("1|challenger|"))
        head, hexed = lines[k].rsplit("|", 1)
        lines[k] = f"{head}|{int(hexed[:2], 16) ^ 1:02x}{hexed[2:]}"
        transcript.write_text("\n".join(lines) + "\n")
        assert main(["verify", str(transcript)]) == 1
        assert capsys.readouterr().out.splitlines()[-1] == "refuted"

    def test_truncated(self, transcript):
        text = transcript.read_text()
        transcript.write_text(text[: len(text) // 2])
        assert main(["verify", str(transcript)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["verify", str(tmp_path / "none.txt")]) == 2
