# -*- coding: utf-8 -*-
"""
Command-line tests: each subcommand end to end in a scratch directory
"""

import csv
import shutil
from pathlib import Path

import pytest

import config
from parity_check_simulator import build_parser, main
from scenario import load_scenario

SCENARIO_DIR = Path(__file__).parent / "scenarios"


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    shutil.copytree(SCENARIO_DIR, tmp_path / "scenarios")
    monkeypatch.chdir(tmp_path)
    return tmp_path


def read_rows(path):
    with open(path, newline='', encoding='utf-8') as f:
        return list(csv.DictReader(f))


def test_parser_requires_scenario():
    with pytest.raises(SystemExit):
        build_parser().parse_args(['run'])


def test_parser_rejects_zero_shots():
    with pytest.raises(SystemExit):
        build_parser().parse_args(['run', '--scenario', 'x.ini', '--shots', '0'])


def test_run_analytic(workdir, capsys):
    main(['run', '--scenario', 'scenarios/passive.ini', '--out', 'run.csv'])
    rows = read_rows(workdir / "run.csv")
    assert len(rows) == 1
    assert rows[0]['sweep_kind'] == "run"
    assert rows[0]['seed'] == ""
    assert "run.csv" in capsys.readouterr().out


def test_run_montecarlo(workdir):
    main(['run', '--scenario', 'scenarios/feedforward.ini', '--shots', '2000', '--seed', '11',
          '--out', 'mc.csv'])
    rows = read_rows(workdir / "mc.csv")
    assert rows[0]['shots'] == "2000"
    assert rows[0]['seed'] == "11"


def test_sweep_analyzer_default_output(workdir):
    main(['sweep-analyzer', '--scenario', 'scenarios/uncorrected.ini'])
    rows = read_rows(workdir / config.DEFAULT_OUTPUT_DIR / "sweep_analyzer_uncorrected.csv")
    assert len(rows) == 37
    assert float(rows[0]['setting']) == 0.0


def test_channel_override(workdir):
    main(['run', '--scenario', 'scenarios/feedforward.ini', '--channel', 'd2a', '--out', 'a.csv'])
    row = read_rows(workdir / "a.csv")[0]
    assert row['rate_per_min'] == row['rate_d2a']


def test_sweep_delay(workdir):
    main(['sweep-delay', '--scenario', 'scenarios/delay_scan.ini', '--out', 'delay.csv'])
    rows = read_rows(workdir / "delay.csv")
    assert len(rows) == 111
    assert rows[0]['sweep_kind'] == "delay"


def test_sweep_kind_mismatch_uses_default_points(workdir):
    main(['sweep-overlap', '--scenario', 'scenarios/passive.ini', '--out', 'overlap.csv'])
    assert len(read_rows(workdir / "overlap.csv")) == 5


def test_calibrate_writes_scenario(workdir):
    main(['calibrate', '--scenario', 'scenarios/calibrated_440.ini', '--passive-rate', '131', '--out', 'cal.ini'])
    calibrated = load_scenario(workdir / "cal.ini")
    assert calibrated.imperfections.anchor_efficiency == pytest.approx(0.3836, abs=1e-3)


def test_bad_scenario_exits_nonzero(workdir):
    (workdir / "bad.ini").write_text("[circuit]\ncoupling_eta = 1.7\n\n[sweep]\nkind = analyzer\n")
    with pytest.raises(SystemExit) as info:
        main(['run', '--scenario', 'bad.ini'])
    assert info.value.code == 1


def test_missing_scenario_exits_nonzero(workdir):
    with pytest.raises(SystemExit) as info:
        main(['run', '--scenario', 'nowhere.ini'])
    assert info.value.code == 1
