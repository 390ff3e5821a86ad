from decimal import Decimal, getcontext

import numpy as np
import pytest

from caresim.config import SimConfig
from caresim.economy import (
    CONTINUE,
    ENTER_WORKFORCE,
    EducationParams,
    SesParams,
    assign_initial_wealth,
    bracket_rate,
    care_income_budget,
    education_continue_probability,
    education_level_at,
    education_step,
    hourly_wage,
    logistic,
    pension,
    ses_table,
    update_experience,
)


def test_wage_at_zero_experience_is_initial():
    assert hourly_wage(SesParams(8.0, 16.0, 0.02), 0.0) == pytest.approx(8.0, abs=1e-12)


def test_wage_spot_value_against_decimal_oracle():
    getcontext().prec = 40
    oracle = Decimal(16) * (Decimal("0.5").ln() * Decimal(-1).exp()).exp()
    got = hourly_wage(SesParams(8.0, 16.0, 0.02), 50.0)
    assert abs(Decimal(got) - oracle) < Decimal("1e-12")
    assert abs(got - 12.40) < 0.01


def test_wage_rises_towards_final():
    ses = SesParams(8.0, 16.0, 0.05)
    w = [hourly_wage(ses, h) for h in range(0, 400, 5)]
    assert all(b > a for a, b in zip(w, w[1:]) if 16.0 - b > 1e-12)
    assert abs(hourly_wage(ses, 1000.0) - 16.0) < 1e-6


def test_wage_flat_when_initial_equals_final():
    assert hourly_wage(SesParams(10.0, 10.0, 0.1), 30.0) == 10.0


def test_wage_rejects_bad_inputs():
    with pytest.raises(ValueError):
        hourly_wage(SesParams(8.0, 16.0, 0.02), -1.0)
    with pytest.raises(ValueError):
        SesParams(20.0, 16.0, 0.02)
    with pytest.raises(ValueError):
        SesParams(8.0, 16.0, 0.0)


def test_ses_table_from_config():
    cfg = SimConfig()
    table = ses_table(cfg)
    assert len(table) == 5
    assert [s.initial_wage for s in table] == list(cfg.ses_initial_wage)


def test_experience_geometric_limit():
    h = 0.0
    for _ in range(2000):
        h = update_experience(h, 1.0, 0.95)
    assert h == pytest.approx(1 / (1 - 0.95), abs=1e-9)


def test_experience_decays_without_work():
    h = 15.0
    for _ in range(1000):
        h = update_experience(h, 0.0, 0.95)
    assert h < 1e-20


def test_experience_one_half_year():
    assert update_experience(0.0, 0.5, 0.95) == 0.5


def test_logistic():
    assert logistic(0.0) == 0.5
    assert logistic(800.0) == 1.0 and logistic(-800.0) == 0.0
    assert logistic(2.0) + logistic(-2.0) == pytest.approx(1.0, abs=1e-15)


def test_education_zero_coefficients_give_one_half():
    params = EducationParams(intercept=0.0, income_coef=0.0, parent_coef=0.0)
    assert education_continue_probability(300.0, 2, params) == 0.5


def test_education_parental_level_raises_probability():
    params = EducationParams()
    probs = [education_continue_probability(200.0, e, params) for e in range(5)]
    assert all(b > a for a, b in zip(probs, probs[1:]))


def test_education_ends_by_24():
    params = EducationParams(intercept=50.0)
    rng = np.random.default_rng(0)
    assert education_step(24, 1000.0, 4, rng, params) == ENTER_WORKFORCE
    assert education_step(22, 1000.0, 4, rng, params) == CONTINUE


def test_education_level_at_exit():
    assert [education_level_at(a) for a in (16, 18, 20, 22, 24, 30)] == [0, 1, 2, 3, 4, 4]


def test_pension_arithmetic():
    assert pension(10.0, 40.0, 0.6) == pytest.approx(240.0, abs=1e-12)
    assert pension(10.0, 40.0, 0.0) == 0.0
    assert pension(10.0, 40.0, 0.6, years_early=50) == 0.0
    assert pension(10.0, 40.0, 0.6, years_early=2, early_penalty=0.05) == pytest.approx(216.0)


def test_wealth_two_agents_by_rank():
    out = assign_initial_wealth([500.0, 100.0], [0.2, 0.8], 100.0, np.random.default_rng(0))
    assert list(out) == [80.0, 20.0]


def test_wealth_follows_salary_rank():
    rng = np.random.default_rng(1)
    salaries = rng.permutation(50).astype(float)
    out = assign_initial_wealth(salaries, [0.1] * 10, 1000.0, np.random.default_rng(2))
    order = np.argsort(salaries)
    assert np.all(np.diff(out[order]) >= 0)
    assert out.sum() == pytest.approx(1000.0)


def test_wealth_empty_and_few_agents():
    assert len(assign_initial_wealth([], [0.5, 0.5], 10.0, np.random.default_rng(0))) == 0
    out = assign_initial_wealth([1.0, 2.0, 3.0], [0.1] * 10, 30.0, np.random.default_rng(0))
    assert out.sum() == pytest.approx(30.0)
    assert out[0] <= out[1] <= out[2]


def test_budget_zero_income():
    assert care_income_budget(0.0, 3) == 0.0


def test_budget_bracket_arithmetic():
    assert care_income_budget(900.0, 3, (200.0, 500.0), (0.1, 0.2, 0.3)) == pytest.approx(180.0)


def test_budget_share_non_decreasing():
    shares = [care_income_budget(pc, 1) / pc for pc in np.linspace(10, 2000, 200)]
    assert all(b >= a for a, b in zip(shares, shares[1:]))
    assert care_income_budget(600.0, 1) / 600 >= care_income_budget(100.0, 1) / 100


def test_bracket_upper_bounds_inclusive():
    assert bracket_rate(200.0, (200.0, 500.0), (0.1, 0.2, 0.3)) == 0.1
    assert bracket_rate(200.01, (200.0, 500.0), (0.1, 0.2, 0.3)) == 0.2
