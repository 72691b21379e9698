import numpy as np
import pytest

from rarl_kit.abstraction import AbstractionPair, measure_realizability
from rarl_kit.envfiles import (
    dump_abstraction,
    dump_options,
    load_abstraction,
    load_env,
    parse_abstraction,
    parse_env,
    parse_options,
    save_abstraction,
    save_env,
)
from rarl_kit.envs import build_chain
from rarl_kit.errors import ParseError

ENV = """\
# two states, the second absorbing
mdp 2 1 0.9
t 0 0 1 1.0
t 1 0 1 0.9999999999
r 1 0 1.0
start 0 1
"""

CHAIN_ABSTRACTION = """\
abs 2 1 0.9
t * 0 0 0 0.5
t * 0 0 1 0.5
t * 1 0 1 1
r * 1 0 1
map 0 0
map 1 0
map 2 1
"""

CHAIN_OPTIONS = """\
options 1
o 2 0 0 1
o 2 0 1 1
o 0 1 2 1
placeholder 0 1
"""


def test_parse_env_renormalizes_rows():
    mdp = parse_env(ENV)
    assert mdp.num_states == 2
    assert mdp.transition[1, 0, 1] == 1.0
    assert mdp.reward.tolist() == [[0.0], [1.0]]
    assert mdp.start_distribution.tolist() == [1.0, 0.0]


@pytest.mark.parametrize(
    "text, line",
    [
        ("t 0 0 1 1.0\n", 1),
        ("mdp 2 1 0.9\nt 0 0 1 0.5\nt 0 0 1 0.5\n", 3),
        ("mdp 2 1 0.9\nt 0 0 2 1.0\n", 2),
        ("mdp 2 1 0.9\nq 0 0\n", 2),
        ("mdp 2 1 0.9\nr 0 0 x\n", 2),
        ("mdp 2 1 0.9\nt 0 0 0 0.5\nt 0 0 1 0.4\nt 1 0 1 1\nstart 0 1\n", 2),
    ],
)
def test_env_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as info:
        parse_env(text, "bad.env")
    assert info.value.line == line
    assert str(info.value).startswith(f"bad.env:{line}:")


def test_env_model_errors_become_parse_errors():
    text = "mdp 1 1 0.9\nt 0 0 0 1\nr 0 0 2.0\nstart 0 1\n"
    with pytest.raises(ParseError):
        parse_env(text)


def test_env_file_keeps_the_corridor(tmp_path, corridor):
    path = tmp_path / "corridor.env"
    save_env(corridor.ground, path)
    loaded = load_env(path)
    assert np.array_equal(loaded.transition, corridor.ground.transition)
    assert np.array_equal(loaded.reward, corridor.ground.reward)
    assert loaded.gamma == corridor.ground.gamma


def test_abstraction_star_rows_and_derived_start():
    ground, _, _ = build_chain(0.95)
    model, mapping = parse_abstraction(CHAIN_ABSTRACTION, ground=ground)
    assert model.is_first_order()
    assert np.all(model.transition[:, 0, 0, 1] == 0.5)
    assert model.abstract_start.tolist() == [1.0, 0.0]
    assert mapping.assignment.tolist() == [0, 0, 1]


def test_abstraction_needs_a_start():
    with pytest.raises(ParseError, match="no start lines"):
        parse_abstraction(CHAIN_ABSTRACTION)


def test_abstraction_rejects_double_mapping():
    text = CHAIN_ABSTRACTION + "map 1 1\n"
    with pytest.raises(ParseError) as info:
        parse_abstraction(text, ground=build_chain()[0])
    assert info.value.line == 9


def test_abstraction_must_cover_the_environment():
    ground = parse_env(ENV)
    with pytest.raises(ParseError, match="mapping covers 3 states"):
        parse_abstraction(CHAIN_ABSTRACTION, ground=ground)


def test_saved_chain_abstraction_stays_realizable(tmp_path):
    ground, mapping, model = build_chain(0.95)
    text = dump_abstraction(model, mapping)
    assert "t * 0 0 1" in text
    path = tmp_path / "chain.abs"
    save_abstraction(model, mapping, path)
    loaded, loaded_mapping = load_abstraction(path, ground)
    assert np.allclose(loaded.transition, model.transition)
    measured = measure_realizability(AbstractionPair(ground, loaded, loaded_mapping))
    assert measured.eps_r <= 1e-9 and measured.eps_t <= 1e-9


def test_options_with_placeholder():
    _, mapping, _ = build_chain()
    omega = parse_options(CHAIN_OPTIONS, mapping)
    assert len(omega) == 2
    assert omega.placeholders == {(0, 1)}
    assert omega.option_for(2, 0).states.tolist() == [0, 1]
    again = parse_options(dump_options(omega), mapping)
    assert again.placeholders == omega.placeholders
    assert np.array_equal(again.option_for(0, 1).policy, omega.option_for(0, 1).policy)


def test_option_rows_must_stay_in_the_block():
    _, mapping, _ = build_chain()
    with pytest.raises(ParseError, match="not in block 0") as info:
        parse_options("options 1\no 2 0 2 1\n", mapping)
    assert info.value.line == 2


def test_option_rows_must_cover_the_block():
    _, mapping, _ = build_chain()
    with pytest.raises(ParseError, match=r"no row for states \[1\]"):
        parse_options("options 1\n\n# only one row\no 2 0 0 1\n", mapping)


def test_option_rows_must_be_distributions():
    _, mapping, _ = build_chain()
    with pytest.raises(ParseError, match="does not sum to 1"):
        parse_options("options 2\no 2 0 0 0.5 0.4\n", mapping)
