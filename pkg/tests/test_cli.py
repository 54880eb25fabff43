import numpy as np
import pytest

from fgdetect import cli, training
from fgdetect.channel import make_channel
from fgdetect.constellations import make_constellation
from fgdetect.errors import ConfigurationError


def small_args(tmp_path, **over):
    base = dict(channel="proakis-b", mod="bpsk", detectors=("bcjr", "ufg"),
                ebno_min=0.0, ebno_max=4.0, ebno_step=2.0, frames=10, seed=3,
                iters=3, params=(), out=str(tmp_path / "out.csv"),
                min_errors=20, block_length=16, mmse_order=10)
    base.update(over)
    return cli.SweepConfig(**base)


def test_read_config_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("channel = proakis-b  # builtin\n\nmod=bpsk\nseed=4\n")
    values = cli.read_config_file(cfg)
    assert values == {"channel": "proakis-b", "mod": "bpsk", "seed": "4"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("just words\n")
    with pytest.raises(ConfigurationError):
        cli.read_config_file(bad)
    with pytest.raises(ConfigurationError):
        cli.read_config_file(tmp_path / "missing.cfg")


def test_config_file_with_cli_override(tmp_path):
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("channel=proakis-a\nseed=9\nframes=77\n")
    parser = cli.build_parser()
    args = parser.parse_args(["sweep", "--config", str(cfgfile), "--seed", "12",
                              "--out", str(tmp_path / "o.csv")])
    cfg = cli.sweep_config_from_args(args)
    assert cfg.channel == "proakis-a"
    assert cfg.seed == 12          # CLI wins
    assert cfg.frames == 77        # file wins over default
    unknown = tmp_path / "u.cfg"
    unknown.write_text("fizz=1\n")
    args = parser.parse_args(["sweep", "--config", str(unknown)])
    with pytest.raises(ConfigurationError):
        cli.sweep_config_from_args(args)


def test_sweep_config_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        cli._validate_sweep_config(small_args(tmp_path, detectors=("alien",)))
    with pytest.raises(ConfigurationError):
        cli._validate_sweep_config(small_args(tmp_path, detectors=()))
    with pytest.raises(ConfigurationError):
        cli._validate_sweep_config(small_args(tmp_path, ebno_step=-1.0))
    with pytest.raises(ConfigurationError):
        cli._validate_sweep_config(small_args(tmp_path, ebno_max=-1.0))


def test_ebn0_grid():
    cfg = cli.SweepConfig(ebno_min=0.0, ebno_max=12.0, ebno_step=2.0)
    assert cli.ebn0_grid(cfg) == [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0]
    cfg = cli.SweepConfig(ebno_min=5.0, ebno_max=5.0, ebno_step=1.0)
    assert cli.ebn0_grid(cfg) == [5.0]


def test_run_sweep_columns_and_ranges(tmp_path):
    cfg = small_args(tmp_path, detectors=("bcjr", "mmse", "ffg", "ufg"))
    grid, results = cli.run_sweep(cfg)
    assert grid == [0.0, 2.0, 4.0]
    for det in cfg.detectors:
        assert len(results[det]["ber"]) == 3
        for ber_val in results[det]["ber"]:
            assert 0.0 <= ber_val <= 0.55
        for bmi_val in results[det]["bmi"]:
            assert bmi_val <= 1.0
        for frames in results[det]["frames"]:
            assert 1 <= frames <= cfg.frames


def test_sweep_csv_bitwise_deterministic(tmp_path):
    cfg1 = small_args(tmp_path, out=str(tmp_path / "a.csv"))
    grid, results = cli.run_sweep(cfg1)
    cli.write_sweep_csv(grid, results, cfg1.out)
    cfg2 = small_args(tmp_path, out=str(tmp_path / "b.csv"))
    grid, results = cli.run_sweep(cfg2)
    cli.write_sweep_csv(grid, results, cfg2.out)
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    header = a.decode().splitlines()[0]
    assert header == ("ebn0_db,bcjr_ber,bcjr_bmi,bcjr_frames,"
                      "ufg_ber,ufg_bmi,ufg_frames")


def test_sweep_results_independent_of_detector_set(tmp_path):
    # shared RNG streams: adding a detector must not change another's cells
    lone = cli.run_sweep(small_args(tmp_path, detectors=("ufg",)))[1]
    both = cli.run_sweep(small_args(tmp_path, detectors=("bcjr", "ufg")))[1]
    assert lone["ufg"] == both["ufg"]


def test_cli_sweep_end_to_end(tmp_path):
    out = tmp_path / "r.csv"
    rc = cli.main(["sweep", "--channel", "proakis-b", "--mod", "bpsk",
                   "--detectors", "ufg,mmse", "--ebno-min", "0", "--ebno-max", "2",
                   "--ebno-step", "2", "--frames", "5", "--seed", "1",
                   "--iters", "2", "--block-length", "12", "--min-errors", "5",
                   "--out", str(out)])
    assert rc == cli.EXIT_OK
    assert out.exists()
    assert (tmp_path / "r.png").exists()
    lines = out.read_text().splitlines()
    assert len(lines) == 3  # header + 2 grid points


def test_cli_exit_codes(tmp_path):
    # unknown detector -> configuration error
    rc = cli.main(["sweep", "--detectors", "bogus", "--out", str(tmp_path / "x.csv")])
    assert rc == cli.EXIT_CONFIG_ERROR
    # gfg without a parameter file -> configuration error
    rc = cli.main(["sweep", "--detectors", "gfg", "--frames", "2",
                   "--block-length", "8", "--out", str(tmp_path / "y.csv")])
    assert rc == cli.EXIT_CONFIG_ERROR


def test_cli_sweep_with_params_file(tmp_path):
    ch = make_channel("proakis-b")
    cons = make_constellation("bpsk")
    cfg = training.TrainConfig(n_iters=2, block_length=12, l_p=2, steps=0)
    params = training.init_params("gfg", ch, 12, cfg, np.random.default_rng(0))
    path = tmp_path / "g.npz"
    training.save_params(params, path, "gfg", ch, cons, 12, train_ebn0_db=10.0)
    out = tmp_path / "g.csv"
    rc = cli.main(["sweep", "--detectors", "gfg", "--ebno-min", "4", "--ebno-max", "4",
                   "--ebno-step", "1", "--frames", "4", "--block-length", "12",
                   "--min-errors", "2", "--params", str(path), "--out", str(out)])
    assert rc == cli.EXIT_OK
    # block-length mismatch is rejected
    rc = cli.main(["sweep", "--detectors", "gfg", "--frames", "4",
                   "--block-length", "16", "--params", str(path),
                   "--out", str(tmp_path / "h.csv")])
    assert rc == cli.EXIT_CONFIG_ERROR


def test_cli_train_zero_steps_emits_init_file(tmp_path):
    out = tmp_path / "p.npz"
    rc = cli.main(["train", "--channel", "proakis-b", "--mod", "bpsk",
                   "--kind", "ufg", "--ebno", "10", "--steps", "0",
                   "--block-length", "10", "--iters", "2", "--out", str(out)])
    assert rc == cli.EXIT_OK
    params, meta = training.load_params(out)
    assert meta["kind"] == "ufg"
    assert np.all(params.w_v2f == 1.0)
    rc = cli.main(["train", "--kind", "gfg", "--steps", "0", "--out", str(out)])
    assert rc == cli.EXIT_CONFIG_ERROR  # gfg without --lp


def test_cli_train_and_use_params(tmp_path):
    out = tmp_path / "t.npz"
    rc = cli.main(["train", "--channel", "proakis-b", "--mod", "bpsk",
                   "--kind", "ufg", "--ebno", "8", "--steps", "3", "--batch", "2",
                   "--block-length", "10", "--iters", "2", "--out", str(out)])
    assert rc == cli.EXIT_OK
    assert (tmp_path / "t_loss.csv").exists()
    assert (tmp_path / "t_loss.png").exists()
    rc = cli.main(["sweep", "--detectors", "ufg", "--ebno-min", "8", "--ebno-max", "8",
                   "--ebno-step", "1", "--frames", "3", "--block-length", "10",
                   "--min-errors", "2", "--iters", "2", "--params", str(out),
                   "--out", str(tmp_path / "t.csv")])
    assert rc == cli.EXIT_OK


def test_selftest_passes():
    assert cli.run_selftest(log=lambda s: None)
