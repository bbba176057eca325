import io
import math

import pytest

from blockfade import cli
from blockfade.asymptotic import coherent_capacity, lower_bound_L
from blockfade.channel import ChannelParams
from blockfade.cli import (
    CSV_HEADER,
    PointConfig,
    SweepRow,
    UsageError,
    emit_csv,
    eval_point,
    find_tstar,
    main,
    preset_figure,
    preset_grid,
    read_csv,
    sweep_T,
)

from .oracles import coherent_capacity_closed_form

LOG2 = math.log(2.0)


def test_eval_point_coherent_capacity():
    row = eval_point(PointConfig("C_coh", snr_db=10.0))
    assert row.rate_bits_per_cu == pytest.approx(coherent_capacity_closed_form(10.0) / LOG2, abs=1e-9)
    assert row.stderr_bits is None and row.n_samples is None and row.seed is None


def test_eval_point_lower_bound_dispatch():
    row = eval_point(PointConfig("L", snr_db=10.0, T=50))
    assert row.rate_bits_per_cu == lower_bound_L(ChannelParams(50, 10.0)) / LOG2


def test_eval_point_dt_reproducible():
    cfg = PointConfig("dt", T=10, n=200, epsilon=1e-2, samples=100_000, seed=42)
    a, b = eval_point(cfg), eval_point(cfg)
    assert a == b
    assert a.seed == 42 and a.n_samples == 100_000 and a.stderr_bits > 0


@pytest.mark.parametrize("bound", sorted(cli.NONCOHERENT))
def test_eval_point_rejects_T1_for_noncoherent(bound):
    with pytest.raises(UsageError, match="T >= 2"):
        eval_point(PointConfig(bound, T=1))


def test_eval_point_coherent_bounds_accept_T1():
    assert eval_point(PointConfig("na_coh", T=1, n=1000)).rate_bits_per_cu > 0


@pytest.mark.parametrize("cfg", [
    PointConfig("nope"),
    PointConfig("C_coh", epsilon=0.0),
    PointConfig("C_coh", epsilon=1.0),
    PointConfig("L", T=100, n=50),
])
def test_eval_point_usage_errors(cfg):
    with pytest.raises(UsageError):
        eval_point(cfg)


def test_sweep_T_block_rounding():
    rows = sweep_T(PointConfig("na_noncoh", n=40_000, samples=20_000), [64])
    assert (rows[0].L, rows[0].n) == (625, 40_000)
    rows = sweep_T(PointConfig("na_noncoh", n=4000, samples=20_000), [28])
    assert (rows[0].L, rows[0].n) == (143, 4004)


def test_sweep_T_rows_ascending_and_consistent():
    rows = sweep_T(PointConfig("fano", n=1000), [30, 2, 7, 500, 7])
    assert [r.T for r in rows] == [2, 7, 30, 500]
    assert all(r.L * r.T == r.n for r in rows)


@pytest.mark.parametrize("T_values", [[], [1, 5], [2, 501]])
def test_sweep_T_range_errors(T_values):
    with pytest.raises(UsageError):
        sweep_T(PointConfig("L", n=1000), T_values)


def test_sweep_T_worker_count_invariant():
    base = PointConfig("na_noncoh", n=2000, samples=50_000, seed=3)
    assert sweep_T(base, [4, 9, 20], workers=1) == sweep_T(base, [4, 9, 20], workers=3)


def _row(T, rate, bound="na_noncoh", se=None):
    return SweepRow(10.0, T, 4000, 4000 // T, 1e-3, bound, rate, se, 10 if se else None, 0 if se else None)


def test_find_tstar_tie_goes_to_smaller_T():
    rows = [_row(10, 1.0, "C_coh"), _row(20, 1.0, "C_coh"), _row(5, 1.0, "C_coh")]
    assert find_tstar(rows, "C_coh").T_star == 5
    sweep = sweep_T(PointConfig("C_coh", n=400), range(2, 50))
    assert find_tstar(sweep, "C_coh").T_star == 2


def test_find_tstar_flatness_warning():
    rows = [_row(20, 1.0, se=0.01), _row(30, 1.015, se=0.01), _row(40, 0.9, se=0.01)]
    res = find_tstar(rows)
    assert res.T_star == 30 and res.warning and "T=20" in res.warning
    sharp = [_row(20, 1.0, se=1e-4), _row(30, 1.1, se=1e-4)]
    assert find_tstar(sharp).warning is None
    with pytest.raises(UsageError):
        find_tstar(rows, "dt")


def test_csv_header_and_optionals():
    buf = io.StringIO()
    emit_csv([eval_point(PointConfig("C_coh"))], buf)
    text = buf.getvalue()
    lines = text.split("\n")
    assert lines[0] == "snr_db,T,n,L,epsilon,bound,rate_bits_per_cu,stderr_bits,n_samples,seed"
    assert lines[0].split(",") == list(CSV_HEADER)
    assert text.endswith("\n") and text.count("snr_db") == 1
    assert lines[1].endswith(",C_coh," + lines[1].split(",")[6] + ",,,")


def test_csv_round_trip(tmp_path):
    rows = [
        eval_point(PointConfig("C_coh")),
        eval_point(PointConfig("fano", T=28)),
        SweepRow(10.0, 64, 40000, 625, 1e-3, "dt", 1.6189412345678901, 3.1e-5, 2_000_000, 7),
        SweepRow(-3.5, 2, 4, 2, 0.5, "na_noncoh", -0.1234567890123456, 1e-300, 2, 0),
    ]
    path = tmp_path / "rows.csv"
    emit_csv(rows, path)
    assert read_csv(path) == rows


def test_csv_io_error_names_path(tmp_path):
    target = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv([eval_point(PointConfig("C_coh"))], target)
    with pytest.raises(UsageError):
        emit_csv([], tmp_path / "x.csv")


def test_preset_grids():
    assert preset_grid("fig1")["T"][0] == 2 and preset_grid("fig1")["T"][-1] >= 200
    fig4 = preset_grid("fig4")
    assert 64 in fig4["T"] and 64 in fig4["dt_T"]
    assert 28 in preset_grid("fig3")["dt_T"]
    with pytest.raises(UsageError):
        preset_grid("fig5")


def test_preset_fig1_sandwich_rowwise():
    rows = preset_figure("fig1")
    by = {(r.bound, r.T): r.rate_bits_per_cu for r in rows}
    Ts = sorted({r.T for r in rows})
    assert Ts[0] == 2 and Ts[-1] >= 200
    for T in Ts:
        assert by[("L", T)] <= by[("U", T)]
        assert by[("L", T)] < by[("C_coh", T)]


@pytest.mark.slow
def test_preset_fig2_dt_below_fano():
    rows = preset_figure("fig2", samples=200_000)
    dt = {r.n: r.rate_bits_per_cu for r in rows if r.bound == "dt"}
    fano = {r.n: r.rate_bits_per_cu for r in rows if r.bound == "fano"}
    assert set(dt) == set(fano) and len(dt) == 10
    for n in dt:
        assert dt[n] <= fano[n], n


@pytest.mark.slow
@pytest.mark.parametrize("name, lo, hi", [("fig3", 22, 34), ("fig4", 56, 72)])
def test_preset_tstar(name, lo, hi):
    rows = preset_figure(name, include_dt=False)
    assert lo <= find_tstar(rows, "na_noncoh").T_star <= hi


def test_main_single_point(capsys):
    assert main(["--bound", "C_coh", "--snr-db", "10"]) == 0
    out = capsys.readouterr().out
    rows = read_csv(io.StringIO(out))
    assert rows[0].rate_bits_per_cu == pytest.approx(coherent_capacity(10.0) / LOG2)


def test_main_usage_error_exit_code(capsys):
    assert main(["--bound", "U", "--T", "1"]) == 2
    assert "T >= 2" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["--bound", "bogus"])
    assert exc.value.code == 2


def test_main_io_error_exit_code(tmp_path, capsys):
    assert main(["--bound", "C_coh", "--out", str(tmp_path / "no" / "x.csv")]) == 1
    assert "no" in capsys.readouterr().err


def test_main_config_file_and_override(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# sweep\nbound = L\nsnr-db = 0\nsweep_T = 2:6:2\n")
    out = tmp_path / "rows.csv"
    assert main(["--config", str(conf), "--snr-db", "10", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r.T for r in rows] == [2, 4, 6]
    assert all(r.snr_db == 10.0 and r.bound == "L" for r in rows)
    bad = tmp_path / "bad.conf"
    bad.write_text("colour = blue\n")
    assert main(["--config", str(bad)]) == 2


def test_main_find_tstar(capsys):
    assert main(["--bound", "C_coh", "--n", "100", "--find-tstar"]) == 0
    assert "T* = 2" in capsys.readouterr().err


def test_csv_writes_numpy_scalars_as_plain_decimals():
    import numpy as np

    row = SweepRow(np.float64(10.0), 2, 4, 2, 1e-3, "U", np.float64(1.25), None, None, None)
    buf = io.StringIO()
    emit_csv([row], buf)
    assert buf.getvalue().split("\n")[1] == "10.0,2,4,2,0.001,U,1.25,,,"
