import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from urllc_lte import cli, cli_io
from urllc_lte.blind import CombineRule, Mode
from urllc_lte.harness import PartialSweepError, PointStats, SimConfig, SweepStats

from conftest import DATA


def test_empty_config_gives_defaults():
    assert cli_io.parse_config("") == SimConfig()
    cfg = cli_io.parse_config("# nothing here\n\n")
    assert (cfg.payload_bits, cfg.crc_bits, cfg.n_candidates, cfg.al_set) == (45, 16, 20, (1, 2, 4, 8))


def test_al_subset():
    assert cli_io.parse_config("al_set=1,4").al_set == (1, 4)


def test_full_config_parses():
    text = """
    modes = single, dup-symbolwise   # two modes
    snr_start=-4
    snr_stop=4
    snr_step=0.5
    trials_per_point=1000
    target_events=100
    interference=noise
    combine_rule=always
    fading=block
    """
    cfg = cli_io.parse_config(text)
    assert cfg.modes == (Mode.SINGLE, Mode.DUP_SYMBOLWISE)
    assert cfg.snr_grid[0] == -4 and len(cfg.snr_grid) == 17
    assert cfg.combine_rule is CombineRule.ALWAYS and cfg.fading == "block"
    assert cfg.target_events == 100


@pytest.mark.parametrize("text,line,key", [
    ("trials_per_point=0", 1, "trials_per_point"),
    ("\nsnr_step=abc", 2, "snr_step"),
    ("al_set=1\n\ntrails_per_point=5", 3, "trails_per_point"),
    ("al_set=1,3", 1, "al_set"),
    ("modes=single,triple", 1, "modes"),
])
def test_config_errors_carry_line_and_key(text, line, key):
    with pytest.raises(cli_io.ConfigParseError) as info:
        cli_io.parse_config(text)
    assert info.value.line == line and info.value.key == key
    assert f"line {line}" in str(info.value)


def test_missing_equals_is_an_error():
    with pytest.raises(cli_io.ConfigParseError, match="line 1"):
        cli_io.parse_config("trials_per_point 5")


configs = st.builds(
    SimConfig,
    modes=st.lists(st.sampled_from(list(Mode)), min_size=1, max_size=3).map(tuple),
    al_set=st.lists(st.sampled_from([1, 2, 4, 8]), min_size=1, max_size=4).map(tuple),
    snr_start=st.floats(-50, 0, allow_nan=False),
    snr_stop=st.floats(0, 50, allow_nan=False),
    snr_step=st.floats(0.01, 5, allow_nan=False),
    trials_per_point=st.integers(1, 10**7),
    target_events=st.none() | st.integers(1, 1000),
    master_seed=st.integers(0, 2**64 - 1),
    interference=st.sampled_from(["otherue", "noise"]),
    combine_rule=st.sampled_from(list(CombineRule)),
    fading=st.sampled_from(["iid", "block"]),
    n_candidates=st.integers(1, 20).map(lambda n: 2 * n),
)


@settings(max_examples=150, deadline=None)
@given(configs)
def test_config_roundtrip(cfg):
    assert cli_io.parse_config(cli_io.serialize_config(cfg)) == cfg


def _stats():
    s = SweepStats(notes=["a note"])
    s.points[(Mode.DUP_BITWISE, 2, 1.0)] = PointStats(100, 97, 3, 1, 0, 0, 2, 1000)
    s.points[(Mode.SINGLE, 2, 1.0)] = PointStats(100, 90, 10, 0, 1, 1, 10, 2000)
    s.points[(Mode.SINGLE, 1, -1.5)] = PointStats(50, 0, 50, 0, 0, 0, 50, 1000)
    return s


def test_csv_header_golden():
    header = cli_io.emit_results(SweepStats(), "csv")
    assert header == (DATA / "csv_header.golden").read_text()


def test_one_point_two_lines():
    s = SweepStats()
    s.points[(Mode.SINGLE, 4, 0.0)] = PointStats(10, 9, 1, 0, 0, 0, 1, 200)
    lines = cli_io.emit_results(s, "csv").splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("single,4,0,10,9,1,0,0,200,0.1,0.1,0,0,")


def test_csv_rows_sorted_and_six_digits():
    rows = cli_io.emit_results(_stats(), "csv").splitlines()[1:]
    assert [r.split(",")[:3] for r in rows] == [["single", "1", "-1.5"], ["single", "2", "1"],
                                                ["dup-bitwise", "2", "1"]]
    lo = rows[1].split(",")[13]
    assert lo == f"{_stats().get('single', 2, 1.0).ci95()[0]:.6g}"


def test_emit_is_deterministic():
    assert cli_io.emit_results(_stats(), "csv") == cli_io.emit_results(_stats(), "csv")
    assert cli_io.emit_results(_stats(), "table") == cli_io.emit_results(_stats(), "table")


def test_table_carries_notes_and_reference():
    text = cli_io.emit_results(_stats(), "table")
    assert "note: a note" in text and "3.0513e-04" in text


def test_unknown_format():
    with pytest.raises(ValueError):
        cli_io.emit_results(_stats(), "xml")


@pytest.mark.parametrize("n,value,flag", [
    (20, "3.0513e-04", "exceeds 1e-4 HRLLC data target"),
    (6, "9.1549e-05", "below 1e-4 HRLLC data target"),
])
def test_fp_analytic_text(n, value, flag):
    text = cli_io.fp_analytic_command(n)
    assert value in text and flag in text


def test_fp_analytic_zero():
    assert cli_io.fp_analytic_command(0).startswith("P_FP(N=0) = 0\n")


# --- command line -----------------------------------------------------------

def test_cli_latency_table(capsys):
    assert cli.main(["latency-table"]) == 0
    out = capsys.readouterr().out
    assert "U 0.7" in out and "- 36.0" in out


def test_cli_latency_table_csv(capsys):
    assert cli.main(["latency-table", "--csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 65
    assert "harq,dl,0,rel15-subslot,0.7,URLLC" in lines


def test_cli_latency_breakdown(capsys):
    args = ["latency", "--config-name", "rel15-subslot", "--direction", "ul",
            "--scheme", "harqless", "--k", "3"]
    assert cli.main(args) == 0
    out = capsys.readouterr().out
    assert "18 TTI" in out and "HRLLC" in out


def test_cli_fp_analytic(capsys):
    assert cli.main(["fp-analytic", "--n", "20"]) == 0
    assert "3.0513e-04" in capsys.readouterr().out
    assert cli.main(["fp-analytic", "--n", "-1"]) == 1


def test_cli_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["latency", "--config-name", "rel99"])
    assert info.value.code == 1


def test_cli_selftest(capsys):
    assert cli.main(["codec-selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_cli_selftest_failure_code(monkeypatch, capsys):
    monkeypatch.setattr(cli, "run_selftest", lambda: [("broken", False, "")])
    assert cli.main(["codec-selftest"]) == 2


def test_cli_simulate_writes_csv(tmp_path, capsys):
    conf = tmp_path / "sim.conf"
    conf.write_text("al_set=2\nsnr_start=0\nsnr_stop=0\ntrials_per_point=500\n")
    out = tmp_path / "res.csv"
    code = cli.main(["simulate", "--config", str(conf), "--mode", "single", "--trials", "40",
                     "--seed", "3", "--out", str(out)])
    assert code == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 2 and rows[1].startswith("single,2,0,40,")
    assert "not verifiable" in capsys.readouterr().out


def test_cli_simulate_bad_config(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("al_set=2\nbogus=1\n")
    assert cli.main(["simulate", "--config", str(conf)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_cli_simulate_flag_overrides_bad_file_value(tmp_path, capsys):
    conf = tmp_path / "sim.conf"
    conf.write_text("trials_per_point=0\nal_set=1\nsnr_start=0\nsnr_stop=0\n")
    assert cli.main(["simulate", "--config", str(conf), "--mode", "single", "--trials", "5"]) == 0


def test_cli_partial_sweep(monkeypatch, tmp_path, capsys):
    partial = SweepStats()
    partial.points[(Mode.SINGLE, 1, 0.0)] = PointStats(5, 5, 0, 0, 0, 0, 0, 100)

    def interrupted(cfg, **kw):
        raise PartialSweepError("interrupted", partial)

    monkeypatch.setattr(cli, "run_sweep", interrupted)
    out = tmp_path / "p.csv"
    assert cli.main(["simulate", "--trials", "5", "--out", str(out)]) == 3
    assert len(out.read_text().splitlines()) == 2
