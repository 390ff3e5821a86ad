import pytest

from caresim.config import SimConfig, config_keys, dump_config, load_config, parse_config_text
from caresim.errors import InvariantViolation, MissingFile, ParseError, UnknownKey


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    cfg = load_config(p)
    assert cfg == SimConfig()
    assert (cfg.start_year, cfg.end_year) == (1860, 2050)


def test_no_path_gives_defaults():
    assert load_config(None) == SimConfig()


def test_single_key_override(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("retirementAge = 60\n")
    cfg = load_config(p)
    assert cfg.retirement_age == 60
    assert cfg.replace(retirement_age=65) == SimConfig()


def test_year_ordering_violation(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("startYear = 2030\nendYear = 2020\n")
    with pytest.raises(InvariantViolation):
        load_config(p)


def test_policy_year_must_lie_inside_run():
    with pytest.raises(InvariantViolation):
        SimConfig(policy_start_year=1860)
    with pytest.raises(InvariantViolation):
        SimConfig(policy_start_year=2051)


def test_ages_must_be_ordered():
    with pytest.raises(InvariantViolation):
        SimConfig(working_age=70)


def test_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        load_config(tmp_path / "nope.cfg")


def test_unknown_key():
    with pytest.raises(UnknownKey):
        parse_config_text("retirmentAge = 60")


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as exc:
        parse_config_text("# comment\nstartYear = 1860\nthis line has no equals sign\n")
    assert exc.value.line == 3


def test_bad_value_is_parse_error():
    with pytest.raises(ParseError):
        parse_config_text("endYear = soon")


def test_comments_and_sequences():
    vals = parse_config_text("jobMoveProb = 0, 0.1, 0.2, 0.3, 0.4  # by SES\n")
    assert vals["job_move_prob"] == (0.0, 0.1, 0.2, 0.3, 0.4)


def test_sequence_length_checked():
    with pytest.raises(InvariantViolation):
        SimConfig(job_move_prob=(0.1, 0.2))


def test_dump_round_trip(tmp_path):
    cfg = SimConfig(retirement_age=62, map_size=3, job_move_prob=(0.0, 0.1, 0.2, 0.3, 0.4))
    p = tmp_path / "dump.cfg"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg


def test_every_field_has_a_file_key():
    keys = config_keys()
    assert "startYear" in keys and "rngSeed" in keys
    assert len(keys) == len(set(keys))


def test_relative_table_paths_resolve_against_config_dir(tmp_path):
    sub = tmp_path / "cfgs"
    sub.mkdir()
    (sub / "map.csv").write_text("townId,x,y,densityWeight,lhaBand\n0,0,0,1,1\n")
    (sub / "run.cfg").write_text("mapFile = map.csv\n")
    cfg = load_config(sub / "run.cfg")
    assert cfg.map_file == str((sub / "map.csv").resolve())


def test_job_move_probabilities_bounded():
    with pytest.raises(InvariantViolation):
        SimConfig(job_move_prob=(0.0, 0.1, 0.2, 0.3, 1.5))
