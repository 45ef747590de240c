"""Command-line behavior and exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from mpmfit.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from mpmfit.generator import GeneratorConfig, sample_channel
from mpmfit.grid import FrequencyGrid
from mpmfit.io import ToolConfig, read_archive, read_manifest, write_cfr_csv, write_config

GRID = FrequencyGrid(1e6, 0.49e6, 101)


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "config.json"
    write_config(p, ToolConfig(generator=GeneratorConfig(grid=GRID, max_paths=25, seed=2)))
    return p


def test_generate_zero_channels(tmp_path):
    out = tmp_path / "gen"
    assert main(["generate", "--count", "0", "--out", str(out)]) == EXIT_OK
    assert read_archive(out / "archive.json").entries == []
    assert read_manifest(out / "manifest.json").entries == ()


def test_generate_fit_corpus_stats(tmp_path, small_config, capsys):
    gen = tmp_path / "gen"
    assert main(["generate", "--count", "6", "--out", str(gen), "--config", str(small_config)]) == EXIT_OK
    m = read_manifest(gen / "manifest.json")
    assert len(m.entries) == 6 and m.grid == GRID
    arch = tmp_path / "fits.json"
    rc = main(["fit-corpus", "--manifest", str(gen / "manifest.json"), "--out", str(arch), "--workers", "2"])
    assert rc == EXIT_OK
    fits = read_archive(arch)
    assert [e.id for e in fits.entries] == [e.id for e in m.entries]
    assert all(e.report.final_nrmse_db <= -20.0 for e in fits.entries)
    cfg = tmp_path / "stats.json"
    cfg.write_text(json.dumps({"stats": {"n_boot": 9, "families": ["normal", "gev"]}}))
    rc = main(["stats", "--input", str(arch), "--out", str(tmp_path / "rep"), "--config", str(cfg), "--seed", "3"])
    assert rc == EXIT_OK
    doc = json.loads((tmp_path / "rep" / "report.json").read_text())
    assert doc["channel_count"] == 6
    assert "Fitted distributions" in capsys.readouterr().out


def test_generate_is_seeded(tmp_path, small_config):
    for name in ("a", "b"):
        main(["generate", "--count", "2", "--out", str(tmp_path / name), "--config", str(small_config), "--seed", "8"])
    for f in ("gen-00000.csv", "gen-00001.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_generate_touchstone(tmp_path, small_config):
    out = tmp_path / "gen"
    main(["generate", "--count", "1", "--out", str(out), "--format", "touchstone-s2p", "--config", str(small_config)])
    assert (out / "gen-00000.s2p").exists()


def test_fit_generated_channel(tmp_path, capsys):
    ch = sample_channel(GeneratorConfig(seed=11))
    src = tmp_path / "ch.csv"
    write_cfr_csv(src, ch)
    out = tmp_path / "fit.json"
    assert main(["fit", "--input", str(src), "--out", str(out)]) == EXIT_OK
    e = read_archive(out).entries[0]
    assert e.ok and e.report.final_nrmse_db <= -20.0
    assert "paths" in capsys.readouterr().out


def test_metrics(tmp_path, capsys):
    ch = sample_channel(GeneratorConfig(grid=GRID, max_paths=10))
    src = tmp_path / "ch.csv"
    write_cfr_csv(src, ch)
    out = tmp_path / "m.json"
    assert main(["metrics", "--input", str(src), "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert np.isfinite(doc["average_gain_db"]) and doc["delay_spread_s"] >= 0


@pytest.mark.parametrize(
    "argv",
    [[], ["fit"], ["generate", "--count", "-1", "--out", "x"], ["fit-corpus", "--manifest", "m", "--out", "o", "--workers", "0"], ["nope"]],
)
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_USAGE


def test_missing_input_is_a_data_error(tmp_path, capsys):
    assert main(["fit", "--input", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o.json")]) == EXIT_DATA
    assert "error" in capsys.readouterr().err


def test_bad_file_names_the_channel(tmp_path, capsys):
    src = tmp_path / "broken.csv"
    src.write_text("freq_hz,re,im\n1e6,1,0\n2e6,x,0\n")
    assert main(["metrics", "--input", str(src)]) == EXIT_DATA
    assert "broken.csv:3" in capsys.readouterr().err


def test_fit_corpus_reports_failures(tmp_path, small_config):
    gen = tmp_path / "gen"
    main(["generate", "--count", "2", "--out", str(gen), "--config", str(small_config)])
    (gen / "gen-00001.csv").write_text("freq_hz,re,im\n")
    arch = tmp_path / "fits.json"
    rc = main(["fit-corpus", "--manifest", str(gen / "manifest.json"), "--out", str(arch)])
    assert rc == EXIT_DATA
    fits = read_archive(arch)
    assert [e.ok for e in fits.entries] == [True, False]
    assert "gen-00001" in fits.entries[1].error


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "mpmfit.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("mpmfit ")
