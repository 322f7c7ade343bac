"""Command-line interface: exit codes, run artifacts, aggregation."""

from pathlib import Path

import pytest

from thinn import cli
from thinn import config as cf
from thinn import metrics as mt

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.ini")),
                         ids=lambda p: p.stem)
def test_shipped_configs_load_and_echo(path, tmp_path):
    cfg = cf.load(path)
    echo = tmp_path / "echo.ini"
    cfg.echo(echo)
    again = cf.load(echo)
    assert again.problem == cfg.problem
    assert again.widths == cfg.widths
    assert again.seeds == cfg.seeds
    assert again.sizes == cfg.sizes


SMOKE = """\
[problem]
kind = heat
nu = 0.1
T = 0.25
ic = sine
ic_amplitude = 0.3

[network]
widths = 2 6 1

[quadrature]
n_t = 4
n_x = 8
n_ic = 8
n_bd = 4

[optimizer]
lr0 = 1e-3
steps = 20

[run]
loss = thinn
seeds = 0 1
resample_every = 10
eval_every = 10
out_dir = {out}
"""


def write_config(tmp_path, text=SMOKE, name="run.ini"):
    out = tmp_path / "runs"
    path = tmp_path / name
    path.write_text(text.format(out=out))
    return path, out


def test_missing_config_is_config_error(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "nope.ini")]) == cli.EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_invalid_widths_is_config_error(tmp_path):
    bad = SMOKE.replace("widths = 2 6 1", "widths = 3 6 1")
    path, _ = write_config(tmp_path, bad)
    assert cli.main(["run", str(path)]) == cli.EXIT_CONFIG


def test_unknown_loss_is_config_error(tmp_path):
    bad = SMOKE.replace("loss = thinn", "loss = huber")
    path, _ = write_config(tmp_path, bad)
    assert cli.main(["run", str(path)]) == cli.EXIT_CONFIG


def test_run_writes_expected_artifacts(tmp_path):
    path, out = write_config(tmp_path)
    assert cli.main(["run", str(path)]) == cli.EXIT_OK
    for seed in (0, 1):
        d = out / f"seed{seed}"
        assert (d / "config.ini").exists()
        assert (d / "params.bin").exists()
        text = (d / "metrics.csv").read_text().splitlines()
        assert text[0] == mt.METRICS_HEADER
        # eval at steps 0, 10 and the final step
        assert [int(r.split(",")[0]) for r in text[1:]] == [0, 10, 19]


def test_rerun_is_byte_identical(tmp_path):
    path, out = write_config(tmp_path)
    assert cli.main(["run", str(path)]) == cli.EXIT_OK
    first = (out / "seed0" / "metrics.csv").read_bytes()
    params = (out / "seed0" / "params.bin").read_bytes()
    assert cli.main(["run", str(path)]) == cli.EXIT_OK
    assert (out / "seed0" / "metrics.csv").read_bytes() == first
    assert (out / "seed0" / "params.bin").read_bytes() == params


def test_eval_and_certify_stored_run(tmp_path, capsys):
    path, out = write_config(tmp_path)
    assert cli.main(["run", str(path)]) == cli.EXIT_OK
    assert cli.main(["eval", str(out / "seed0")]) == cli.EXIT_OK
    printed = capsys.readouterr().out
    assert "eps2 = " in printed and "rate = " in printed
    cert_csv = tmp_path / "cert.csv"
    assert cli.main(["certify", str(out / "seed0"),
                     "--out", str(cert_csv)]) == cli.EXIT_OK
    lines = cert_csv.read_text().splitlines()
    assert lines[0] == "name,value"
    names = [ln.split(",")[0] for ln in lines[1:]]
    assert "ell_rho" in names and "fisher_integral" in names


def test_reference_command_heat(tmp_path):
    out = tmp_path / "ref.csv"
    code = cli.main(["reference", "heat", str(out), "--nu", "0.1",
                     "--T", "0.5", "--n-x", "32", "--n-out", "5"])
    assert code == cli.EXIT_OK
    assert out.exists()


def test_reference_cfl_violation_is_numeric_error(tmp_path):
    out = tmp_path / "ref.csv"
    code = cli.main(["reference", "burgers", str(out), "--nu", "0.05",
                     "--n-x", "64", "--dt", "1.0"])
    assert code == cli.EXIT_NUMERIC


def make_metrics_dir(tmp_path, name, eps2_values, steps=(0, 10)):
    d = tmp_path / name
    d.mkdir()
    with open(d / "metrics.csv", "w") as f:
        f.write(mt.METRICS_HEADER + "\n")
        for step, e2 in zip(steps, eps2_values):
            row = mt.MetricsRow(step=step, eps1=e2, eps2=e2, rate=e2,
                                i_dyn=0.0, i_0=0.0, l_bc=0.0, clamp_events=0)
            f.write(row.csv_line() + "\n")
    return d


def test_aggregate_quantiles(tmp_path):
    dirs = [make_metrics_dir(tmp_path, f"r{i}", vals)
            for i, vals in enumerate([(1.0, 1.0), (2.0, 2.0), (30.0, 30.0)])]
    out = tmp_path / "agg.csv"
    code = cli.main(["aggregate"] + [str(d) for d in dirs]
                    + ["--out", str(out)])
    assert code == cli.EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("step,eps1_median")
    first = lines[1].split(",")
    assert float(first[3]) == 2.0     # eps2 median
    assert float(first[4]) == 1.5     # eps2 first quartile, type-7
    assert (tmp_path / "plot_eps2.csv").exists()
    meta = out.with_suffix(".csv.meta").read_text()
    assert "type 7" in meta


def test_aggregate_mismatched_schedules(tmp_path):
    a = make_metrics_dir(tmp_path, "a", (1.0, 1.0), steps=(0, 10))
    b = make_metrics_dir(tmp_path, "b", (1.0, 1.0), steps=(0, 20))
    code = cli.main(["aggregate", str(a), str(b),
                     "--out", str(tmp_path / "agg.csv")])
    assert code == cli.EXIT_CONFIG
