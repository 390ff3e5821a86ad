import pytest

from caresim.errors import InvariantViolation, MissingFile, ParseError, UnknownKey
from caresim.policy import BENCHMARK, PRESETS, PolicyScenario, apply_policy, load_scenario


def test_preset_lever_values():
    assert BENCHMARK.levers() == (0.2, 20.0, 4, 0.0)
    assert PRESETS["P1"].alpha == 0.8
    assert PRESETS["P2"].beta == 32.0
    assert PRESETS["P3"].gamma == 3
    assert PRESETS["P4"].theta == 0.5
    # each preset moves exactly one lever
    for name in ("P1", "P2", "P3", "P4"):
        diff = [a != b for a, b in zip(PRESETS[name].levers(), BENCHMARK.levers())]
        assert sum(diff) == 1


def test_pre_activation_uses_benchmark():
    assert apply_policy(PRESETS["P4"], 2019).theta == 0.0
    assert apply_policy(PRESETS["P4"], 2020).theta == 0.5


def test_post_activation_lever():
    assert apply_policy(PRESETS["P1"], 2030).alpha == 0.8


def test_benchmark_levers_constant():
    levers = {apply_policy(BENCHMARK, y) for y in range(1860, 2051)}
    assert len(levers) == 1


def test_subsidy_cap_scales_with_alpha():
    base = apply_policy(BENCHMARK, 2030, base_subsidy_cap=2000.0).child_subsidy_cap
    p1 = apply_policy(PRESETS["P1"], 2030, base_subsidy_cap=2000.0).child_subsidy_cap
    assert base == 2000.0 and p1 == pytest.approx(8000.0)


@pytest.mark.parametrize(
    "kw", [{"alpha": 1.5}, {"theta": -0.1}, {"beta": -1.0}, {"gamma": 5}]
)
def test_lever_validation(kw):
    with pytest.raises(InvariantViolation):
        PolicyScenario(**kw)


def test_load_preset_with_activation():
    sc = load_scenario("P3", activation_year=2030)
    assert sc.gamma == 3 and sc.activation_year == 2030


def test_load_scenario_file(tmp_path):
    p = tmp_path / "mix.scn"
    p.write_text("alpha = 0.5\ntheta = 0.25  # half way\n")
    sc = load_scenario(p, activation_year=2025)
    assert (sc.name, sc.alpha, sc.beta, sc.gamma, sc.theta) == ("mix", 0.5, 20.0, 4, 0.25)
    assert sc.activation_year == 2025


def test_scenario_file_errors(tmp_path):
    with pytest.raises(MissingFile):
        load_scenario(tmp_path / "none.scn")
    p = tmp_path / "bad.scn"
    p.write_text("delta = 1\n")
    with pytest.raises(UnknownKey):
        load_scenario(p)
    p.write_text("alpha\n")
    with pytest.raises(ParseError):
        load_scenario(p)
    p.write_text("gamma = high\n")
    with pytest.raises(ParseError):
        load_scenario(p)
