import pytest

from towbombe.cli import build_parser, main


def test_help_lists_every_flag_with_canonical_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["run-cbp", "--help"])
    out = capsys.readouterr().out
    for flag in ("--config", "--seed", "--samples", "--plays", "--machines", "--players", "--fluct",
                 "--amplitude", "--depth", "--omega", "--policy", "--workers", "--out"):
        assert flag in out
    assert "0.03,0.05,0.1,0.2,0.9" in out and "default 1000" in out and "default 0.08" in out


def test_subcommands():
    sub = build_parser()._subparsers._group_actions[0].choices
    assert set(sub) == {"run-bp", "run-cbp", "run-epd", "sweep", "verify-tables", "verify-invariants"}


def test_run_cbp_twice_identical(tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["run-cbp", "--seed", "42", "--samples", "10", "--plays", "1000", "--out", str(tmp_path / name)]) == 0
    for f in ("records.csv", "summary.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_run_bp_writes_flattening_regret(tmp_path, capsys):
    assert main(["run-bp", "--pa", "0.9", "--pb", "0.2", "--omega", "auto", "--samples", "200", "--plays", "4000",
                 "--out", str(tmp_path)]) == 0
    rows = [line.split(",") for line in (tmp_path / "regret.csv").read_text().splitlines()
            if not line.startswith("#")][1:]
    r = [float(x[1]) for x in rows]
    assert r[-1] - r[1999] < 0.1 * r[999]


def test_verify_tables_reports_discrepancy(capsys):
    assert main(["verify-tables"]) == 0
    out = capsys.readouterr().out
    assert "('B', 'C', 'D')" in out and "FAIL" not in out


def test_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["run-cbp", "--fluct", "sideways"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2
    assert main(["run-cbp", "--plays", "0"]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[dynamics]\nbogus = 1\n")
    assert main(["run-cbp", "--config", str(bad)]) == 2
    assert main(["run-cbp", "--config", str(tmp_path / "missing.ini")]) == 4
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert main(["run-cbp", "--samples", "1", "--plays", "5", "--out", str(blocker / "x")]) == 4


def test_corrupt_table_is_a_data_error(monkeypatch, capsys):
    from towbombe import cli
    from towbombe.errors import DataIntegrityError

    def broken():
        raise DataIntegrityError("EPD table incomplete")

    monkeypatch.setattr(cli, "verify_tables", broken)
    assert main(["verify-tables"]) == 3


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[dynamics]\nplays = 50\nsamples = 40\n[fluctuation]\nkind = fixed\namplitude = 2\n")
    assert main(["run-cbp", "--config", str(cfg), "--samples", "3", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "records.csv").read_text()
    assert "# [dynamics] plays = 50" in text and "# [dynamics] samples = 3" in text
    assert "# [fluctuation] fluct = fixed" in text and "# [fluctuation] amplitude = 2.0" in text


def test_run_epd_and_sweep(capsys):
    assert main(["run-epd", "--samples", "5", "--plays", "100"]) == 0
    assert main(["sweep", "--samples", "5", "--plays", "100", "--amplitudes", "0,8", "--kinds", "random"]) == 0
    out = capsys.readouterr().out
    assert "epd|random" in out and out.count("random    ") == 2
