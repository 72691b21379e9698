import orjson
import pandas as pd
import pytest
import typer
from typer.testing import CliRunner

from rarl_kit.cli import EXIT_CAP, EXIT_INFEASIBLE, EXIT_OK, EXIT_PARSE, app, parse_seed_range, parse_tuple
from rarl_kit.envfiles import save_abstraction
from rarl_kit.envs import build_chain, corridor_fixture

runner = CliRunner()
EPS_T = 0.09 * (1 - 0.95)


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


# -------- argument parsing --------


def test_seed_range():
    assert parse_seed_range("2..4") == (2, 4)
    assert parse_seed_range(None) is None
    for bad in ("4..2", "3", "a..b"):
        with pytest.raises(typer.BadParameter):
            parse_seed_range(bad)


def test_tuple():
    assert parse_tuple("1, 0,2") == (1, 0, 2)
    with pytest.raises(typer.BadParameter):
        parse_tuple("1,0")


@pytest.mark.parametrize(
    "args",
    [
        ["verify", "--env", "no-such-env"],
        ["verify", "--env", "chain", "--checks", "realizable,lumpability"],
        ["verify", "--env", "chain", "--eps-t", "1.5"],
        ["run", "--env", "chain", "--seeds", "3..1"],
        ["realize", "--env", "chain", "--tuple", "0,1"],
    ],
)
def test_bad_options_exit_with_parse_code(args, tmp_path):
    result = invoke(*args, "--out", tmp_path)
    assert result.exit_code == EXIT_PARSE


def test_malformed_environment_file(tmp_path):
    path = tmp_path / "broken.env"
    path.write_text("mdp 2 1 0.9\nt 0 0 5 1\n", encoding="utf-8")
    result = invoke("verify", "--env", path, "--out", tmp_path / "out")
    assert result.exit_code == EXIT_PARSE


# -------- verify --------


def test_verify_chain(tmp_path):
    result = invoke("verify", "--env", "chain", "--out", tmp_path)
    assert result.exit_code == EXIT_OK
    verdicts = pd.read_csv(tmp_path / "verdicts.csv")
    assert verdicts["check"].tolist() == ["realizable", "admissible"]
    assert verdicts["holds"].all()
    assert set(pd.read_csv(tmp_path / "realizability.csv")["method"]) == {"enumeration"}


def test_verify_chain_from_abstraction_file(tmp_path):
    ground, mapping, model = build_chain(0.95)
    path = tmp_path / "chain.abs"
    save_abstraction(model, mapping, path)
    result = invoke("verify", "--env", "chain", "--abs", path, "--checks", "realizable", "--out", tmp_path / "out")
    assert result.exit_code == EXIT_OK


def test_verify_chain_is_not_a_homomorphism(tmp_path):
    result = invoke("verify", "--env", "chain", "--checks", "homomorphism", "--out", tmp_path)
    assert result.exit_code == EXIT_INFEASIBLE
    verdicts = pd.read_csv(tmp_path / "verdicts.csv", keep_default_na=False)
    assert verdicts.loc[0, "reason"] == "transition-pair"
    assert verdicts.loc[0, "witness"] == "(0, 1)"


def test_verify_mirrored_arms_relations(tmp_path):
    result = invoke("verify", "--env", "mirrored-arms", "--checks", "homomorphism,bisimulation", "--out", tmp_path)
    assert result.exit_code == EXIT_OK


def test_verify_corridor_reports_far_entry(tmp_path):
    result = invoke("verify", "--env", "corridor", "--eps-t", EPS_T, "--out", tmp_path)
    assert result.exit_code == EXIT_INFEASIBLE
    s1 = corridor_fixture().labels["s1"]
    verdicts = pd.read_csv(tmp_path / "verdicts.csv", keep_default_na=False).set_index("check")
    assert verdicts.loc["realizable", "witness"] == f"tuple (1,0,2) entry {s1}"
    assert verdicts.loc["admissible", "reason"] == "undecided"
    methods = pd.read_csv(tmp_path / "realizability.csv").set_index(["previous", "abstract_state", "action"])["method"]
    assert methods.loc[(1, 0, 2)] == "lp"
    assert methods.loc[(0, 2, 0)] == "enumeration"


# -------- realize --------


def test_realize_near_entry_writes_option_and_certificate(tmp_path):
    result = invoke("realize", "--env", "corridor", "--tuple", "1,0,2", "--entry", "s2",
                    "--eps-t", EPS_T, "--out", tmp_path)
    assert result.exit_code == EXIT_OK
    assert (tmp_path / "option.txt").read_text(encoding="utf-8").startswith("options 4")
    certificate = pd.read_csv(tmp_path / "certificate.csv")
    assert certificate["target"].tolist() == [1, 2]
    assert certificate.loc[certificate["target"] == 2, "h_tilde"].item() == pytest.approx(0.03)


def test_realize_far_entry_is_infeasible(tmp_path):
    result = invoke("realize", "--env", "corridor", "--tuple", "1,0,2", "--entry", "s1",
                    "--eps-t", EPS_T, "--out", tmp_path)
    assert result.exit_code == EXIT_INFEASIBLE
    assert not (tmp_path / "option.txt").exists()


def test_realize_rejects_non_entry(tmp_path):
    result = invoke("realize", "--env", "corridor", "--tuple", "1,0,2", "--entry", "goal", "--out", tmp_path)
    assert result.exit_code == 1


def test_realize_chain_online(tmp_path):
    result = invoke("realize", "--env", "chain", "--tuple", "2,0,0", "--online", "--eps-t", 1.0,
                    "--min-visits", 1, "--min-entry-samples", 1, "--episodes", 200, "--out", tmp_path)
    assert result.exit_code == EXIT_OK
    assert (tmp_path / "option.txt").exists()


# -------- run and report --------


def test_run_and_report_chain(tmp_path):
    result = invoke("run", "--env", "chain", "--min-visits", 1, "--min-entry-samples", 1, "--out", tmp_path)
    assert result.exit_code == EXIT_OK
    seed_dir = tmp_path / "seed-0"
    meta = orjson.loads((seed_dir / "meta.json").read_bytes())
    assert not meta["hit_cap"]
    assert meta["env"] == "chain"
    assert meta["optimal_value"] == pytest.approx(0.95 ** 2 / 0.05)
    assert meta["options_value"] == pytest.approx(meta["optimal_value"])
    assert meta["escapes"] <= meta["budget"]
    for name in ("episodes.csv", "corrections.csv", "options.txt", "abstraction.txt"):
        assert (seed_dir / name).exists()

    assert invoke("report", tmp_path).exit_code == EXIT_OK
    summary = pd.read_csv(tmp_path / "summary.csv")
    assert summary["within_bound"].all()
    assert summary["within_budget"].all()
    returns = pd.read_csv(tmp_path / "returns.csv")
    assert returns.columns.tolist() == ["seed", "episode", "return"]
    assert len(returns) == meta["episodes_run"]


def test_run_hits_episode_cap(tmp_path):
    result = invoke("run", "--env", "chain", "--min-visits", 1, "--min-entry-samples", 1,
                    "--episodes", 2, "--out", tmp_path)
    assert result.exit_code == EXIT_CAP
    assert (tmp_path / "seed-0" / "meta.json").exists()


def test_report_of_empty_directory(tmp_path):
    assert invoke("report", tmp_path).exit_code == 1
