from dataclasses import replace

import numpy as np
import pytest

from caresim.config import SimConfig
from caresim.errors import InvalidLevel, TableError
from caresim.health import (
    CareNeedLevel,
    HealthParams,
    OnsetTable,
    care_need_hours,
    child_net_need,
    episode_cost,
    hospitalization,
    hospitalization_probability,
    household_child_care_need,
    parse_age_band,
    progression_probability,
    state_hours,
)


@pytest.fixture
def params():
    return HealthParams.from_config(SimConfig())


@pytest.mark.parametrize("level,hours", [(0, 0), (1, 8), (2, 16), (3, 36), (4, 84)])
def test_need_hours(level, hours):
    assert care_need_hours(level) == hours
    assert CareNeedLevel(level).weekly_hours == hours


def test_need_categories():
    assert [CareNeedLevel(i).category for i in range(5)] == ["None", "Low", "Moderate", "Substantial", "Critical"]


@pytest.mark.parametrize("bad", [-1, 5, 2.0, True, "3"])
def test_invalid_level(bad):
    with pytest.raises(InvalidLevel):
        care_need_hours(bad)


def test_invalid_level_object():
    with pytest.raises(InvalidLevel):
        CareNeedLevel(7)


def test_no_unmet_need_means_no_uplift(params):
    p0 = progression_probability(2, 70, "female", 0.0, 3, params)
    expected = params.progression_base[2] * np.exp(
        params.progression_age_rate * (70 - params.progression_reference_age)
    ) * params.ses_multiplier[2]
    assert p0 == pytest.approx(expected, rel=1e-12)


def test_unmet_need_raises_progression(params):
    low = progression_probability(1, 75, "male", 0.0, 2, params)
    high = progression_probability(1, 75, "male", 2000.0, 2, params)
    assert high > low


def test_top_level_absorbing(params):
    assert progression_probability(4, 90, "female", 1e6, 1, params) == 0.0


def test_higher_ses_progresses_slower(params):
    probs = [progression_probability(1, 70, "male", 0.0, s, params) for s in range(1, 6)]
    assert all(b < a for a, b in zip(probs, probs[1:]))


def test_progression_rises_with_age(params):
    assert progression_probability(0, 80, "female", 0, 3, params) > progression_probability(0, 50, "female", 0, 3, params)
    assert progression_probability(2, 80, "female", 0, 3, params) > progression_probability(2, 50, "female", 0, 3, params)


def test_progression_clamped(params):
    p = progression_probability(3, 100, "male", 1e9, 1, params)
    assert p == 1.0


def test_onset_table_overrides_parametric(tmp_path, params):
    path = tmp_path / "onset.csv"
    path.write_text("sex,ageBand,probability\nfemale,60-69,0.03\nfemale,70+,0.08\nmale,0-200,0.01\n")
    table = OnsetTable.from_csv(path)
    p = replace(params, unmet_uplift=0.0, ses_multiplier=(1.0,) * 5, onset_table=table)
    assert progression_probability(0, 65, "female", 0, 1, p) == 0.03
    assert progression_probability(0, 95, "female", 0, 1, p) == 0.08
    assert progression_probability(0, 30, "female", 0, 1, p) == 0.0
    assert progression_probability(0, 30, "male", 0, 1, p) == 0.01


def test_onset_table_validation(tmp_path):
    bad_header = tmp_path / "a.csv"
    bad_header.write_text("sex,band,p\n")
    with pytest.raises(TableError):
        OnsetTable.from_csv(bad_header)
    bad_p = tmp_path / "b.csv"
    bad_p.write_text("sex,ageBand,probability\nmale,60-69,1.5\n")
    with pytest.raises(TableError):
        OnsetTable.from_csv(bad_p)


def test_age_bands():
    assert parse_age_band("16-24") == (16, 24)
    assert parse_age_band("65+")[0] == 65
    assert parse_age_band("40") == (40, 40)


def test_no_hospitalisation_without_risk(params):
    p = replace(params, hospital_base=(0.0, 0.01, 0.02, 0.03, 0.05))
    assert hospitalization_probability(0, 0.0, p) == 0.0
    rng = np.random.default_rng(0)
    assert all(hospitalization(0, 0.0, rng, p) is None for _ in range(500))


def test_unmet_need_raises_hospitalisation(params):
    assert hospitalization_probability(2, 20.0, params) > hospitalization_probability(2, 0.0, params)


def test_episode_cost():
    assert episode_cost(2, 2000.0) == 4000.0


def test_episode_durations(params):
    p = replace(params, hospital_base=(1.0,) * 5, hospital_mean_weeks=3.0, hospital_weekly_cost=100.0)
    rng = np.random.default_rng(4)
    eps = [hospitalization(1, 0.0, rng, p) for _ in range(4000)]
    weeks = np.array([e.weeks for e in eps])
    assert weeks.min() >= 1
    assert abs(weeks.mean() - 3.0) < 0.15
    assert all(e.cost == e.weeks * 100.0 for e in eps)


def test_child_need_examples():
    assert household_child_care_need([2], 20, 30)[0] == 56
    assert household_child_care_need([3], 20, 30)[0] == 36
    assert household_child_care_need([3, 7], 32, 30)[0] == (56 - 32) + (56 - 30)


def test_newborn_flag_and_age_limits():
    need, newborn = household_child_care_need([0, 12, 15], 20, 30)
    assert need == 0 and newborn
    assert child_net_need(11, 20, 30) == 26
    assert child_net_need(12, 20, 30) == 0


def test_state_hours_never_exceed_need():
    assert state_hours(4, 80.0, 30.0) == 80.0
    assert child_net_need(4, 80.0, 30.0) == 0.0
