"""Command-line front-end: single points, sweeps, T* search and figure presets.

Everything is computed in nats and converted to bits per channel use only
when a :class:`SweepRow` is built. Rows are written as CSV with the header
in :data:`CSV_HEADER`.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import fbl
from .asymptotic import coherent_capacity, lower_bound_L, upper_bound_U
from .channel import ChannelParams
from .errors import DomainError

log = logging.getLogger("blockfade")

BOUNDS = ("L", "U", "C_coh", "fano", "dt", "na_coh", "na_noncoh")
NONCOHERENT = {"L", "U", "fano", "dt", "na_noncoh"}
MONTE_CARLO = {"dt", "na_noncoh"}
CSV_HEADER = ("snr_db", "T", "n", "L", "epsilon", "bound", "rate_bits_per_cu",
              "stderr_bits", "n_samples", "seed")
LOG2 = math.log(2.0)


class UsageError(DomainError):
    """Invalid command-line or sweep configuration."""


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    T: int
    n: int
    L: int
    epsilon: float
    bound: str
    rate_bits_per_cu: float
    stderr_bits: Optional[float] = None
    n_samples: Optional[int] = None
    seed: Optional[int] = None


@dataclass(frozen=True)
class PointConfig:
    bound: str
    snr_db: float = 10.0
    T: int = 50
    n: int = 4000
    epsilon: float = 1e-3
    samples: Optional[int] = None
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class TStar:
    T_star: int
    rate_bits_per_cu: float
    row: SweepRow
    warning: Optional[str] = None


def _validate(cfg: PointConfig):
    if cfg.bound not in BOUNDS:
        raise UsageError(f"unknown bound {cfg.bound!r}; choose from {', '.join(BOUNDS)}")
    if cfg.bound in NONCOHERENT and cfg.T < 2:
        raise UsageError(f"bound {cfg.bound} needs coherence time T >= 2 (got T={cfg.T}); "
                         "the noncoherent formulas involve Gamma(T-1) and psi(T-1)")
    if cfg.T < 1:
        raise UsageError("T must be a positive integer")
    if not 0.0 < cfg.epsilon < 1.0:
        raise UsageError(f"epsilon must lie in (0, 1), got {cfg.epsilon}")
    if cfg.n < cfg.T:
        raise UsageError(f"block-length n={cfg.n} shorter than one coherence block T={cfg.T}")


def blocks_for(n: int, T: int) -> int:
    """Number of coherence blocks for a nominal block-length (round half to even)."""
    return max(1, round(n / T))


def point_seed(base_seed: int, T: int, n: int, bound: str) -> int:
    """Deterministic per-point seed from ``(base_seed, T, n, bound)``."""
    ss = np.random.SeedSequence([base_seed, T, n, BOUNDS.index(bound)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def eval_point(cfg: PointConfig) -> SweepRow:
    """Evaluate one bound at one configuration.

    The block-length actually used is ``n' = L T`` with ``L = round(n / T)``;
    ``n'`` is what the row reports.
    """
    _validate(cfg)
    rho = 10.0 ** (cfg.snr_db / 10.0)
    L = blocks_for(cfg.n, cfg.T)
    n = L * cfg.T
    stderr = samples = seed = None
    bound = cfg.bound
    if bound == "C_coh":
        rate = coherent_capacity(rho)
    elif bound == "na_coh":
        rate = fbl.coherent_normal_approx(cfg.T, rho, n, cfg.epsilon)
    else:
        params = ChannelParams(cfg.T, rho)
        if bound == "L":
            rate = lower_bound_L(params)
        elif bound == "U":
            rate = upper_bound_U(params)[0]
        elif bound == "fano":
            rate = fbl.fano_upper(upper_bound_U(params)[0], n, cfg.epsilon)
        elif bound == "na_noncoh":
            samples = cfg.samples or fbl.DEFAULT_VBAR_SAMPLES
            seed = cfg.seed
            vbar = fbl.vbar_estimate(params, samples, point_seed(cfg.seed, cfg.T, n, bound),
                                     workers=cfg.workers)
            rate = fbl.normal_approx_noncoh(params, n, cfg.epsilon, vbar)
            stderr = fbl.normal_approx_noncoh_stderr(n, cfg.epsilon, vbar)
        else:
            samples = cfg.samples or fbl.DEFAULT_DT_SAMPLES
            seed = cfg.seed
            spec = fbl.FblSpec(n, L, cfg.epsilon, params)
            result = fbl.dt_rate(spec, samples, point_seed(cfg.seed, cfg.T, n, bound),
                                 workers=cfg.workers)
            rate = result.rate
            stderr = result.rate_stderr
    log.info("%s T=%d n=%d: %.6f bits/cu", bound, cfg.T, n, rate / LOG2)
    return SweepRow(float(cfg.snr_db), cfg.T, n, L, float(cfg.epsilon), bound, float(rate) / LOG2,
                    None if stderr is None else float(stderr) / LOG2, samples, seed)


def sweep_T(base: PointConfig, T_values: Iterable[int], workers: int = 1) -> list[SweepRow]:
    """Evaluate ``base`` at every coherence time in ``T_values``, ascending."""
    T_values = sorted(set(int(T) for T in T_values))
    if not T_values:
        raise UsageError("empty T range")
    if T_values[0] < 2 or T_values[-1] > base.n // 2:
        raise UsageError(f"T range must lie within [2, n/2] = [2, {base.n // 2}]")
    configs = [replace(base, T=T) for T in T_values]
    if workers <= 1:
        return [eval_point(c) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(eval_point, configs))


def sweep_n(base: PointConfig, n_values: Iterable[int], workers: int = 1) -> list[SweepRow]:
    configs = [replace(base, n=int(n)) for n in sorted(set(n_values))]
    if not configs:
        raise UsageError("empty n list")
    if workers <= 1:
        return [eval_point(c) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(eval_point, configs))


def find_tstar(rows: Sequence[SweepRow], bound: str = "na_noncoh") -> TStar:
    """Rate-maximizing coherence time among ``rows`` of one bound.

    Ties go to the smaller ``T``. For Monte Carlo bounds a warning is attached
    when the runner-up is within two combined standard errors of the winner.
    """
    cand = sorted((r for r in rows if r.bound == bound), key=lambda r: r.T)
    if not cand:
        raise UsageError(f"no rows for bound {bound!r}")
    best = max(cand, key=lambda r: (r.rate_bits_per_cu, -r.T))
    warning = None
    others = [r for r in cand if r is not best]
    if bound in MONTE_CARLO and others:
        runner = max(others, key=lambda r: (r.rate_bits_per_cu, -r.T))
        se = math.hypot(best.stderr_bits or 0.0, runner.stderr_bits or 0.0)
        if best.rate_bits_per_cu - runner.rate_bits_per_cu <= 2.0 * se:
            warning = (f"flat maximum: T={runner.T} is within 2 combined stderr "
                       f"({best.rate_bits_per_cu - runner.rate_bits_per_cu:.3g} <= {2 * se:.3g} bits)")
    return TStar(best.T, best.rate_bits_per_cu, best, warning)


# ---------------------------------------------------------------------------
# CSV

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def emit_csv(rows: Sequence[SweepRow], destination) -> None:
    """Write rows as CSV to a path or an open text stream."""
    if not rows:
        raise UsageError("no rows to write")
    if hasattr(destination, "write"):
        _write_rows(rows, destination)
        return
    path = Path(destination)
    try:
        with path.open("w", newline="") as fh:
            _write_rows(rows, fh)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def _write_rows(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in CSV_HEADER])


def _parse_field(name, text):
    if text == "":
        return None
    if name in ("T", "n", "L", "n_samples", "seed"):
        return int(text)
    if name == "bound":
        return text
    return float(text)


def read_csv(source) -> list[SweepRow]:
    """Inverse of :func:`emit_csv`."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise UsageError(f"unexpected CSV header {header}")
    return [SweepRow(**{name: _parse_field(name, value) for name, value in zip(header, rec)})
            for rec in reader if rec]


# ---------------------------------------------------------------------------
# Figure presets

PRESET_SNR_DB = 10.0
PRESET_EPSILON = 1e-3


def preset_grid(name: str) -> dict:
    """Parameter grid behind each figure preset."""
    if name == "fig1":
        T = list(range(2, 21)) + list(range(25, 201, 5))
        return {"sweep": "T", "n": 4000, "T": T, "bounds": ("L", "U", "C_coh")}
    if name == "fig2":
        n = [50 * L for L in (4, 10, 20, 40, 60, 80, 100, 120, 160, 200)]
        return {"sweep": "n", "T": 50, "n": n,
                "bounds": ("fano", "dt", "na_noncoh", "na_coh", "C_coh")}
    if name in ("fig3", "fig4"):
        n = 4000 if name == "fig3" else 40000
        T = list(range(2, 201))
        # DT is evaluated on a sparse subgrid; its cost grows like n / T per sample.
        dt_T = [8, 12, 16, 20, 24, 28, 32, 40, 48, 56, 64, 72, 80, 100, 128, 160, 200]
        return {"sweep": "T", "n": n, "T": T, "dt_T": dt_T,
                "bounds": ("fano", "dt", "na_noncoh", "na_coh", "C_coh")}
    raise UsageError(f"unknown preset {name!r}; choose fig1..fig4")


def preset_figure(name: str, samples: Optional[int] = None, seed: int = 0,
                  include_dt: bool = True, workers: int = 1) -> list[SweepRow]:
    """Rows for one of the four figure presets.

    ``samples`` overrides the Monte Carlo budget of the DT rows (default
    2e5 in the T-sweeps, 2e6 in fig2) and of the dispersion estimates.
    """
    grid = preset_grid(name)
    rows: list[SweepRow] = []
    for bound in grid["bounds"]:
        if bound == "dt" and not include_dt:
            continue
        if grid["sweep"] == "T":
            T_values = grid.get("dt_T", grid["T"]) if bound == "dt" else grid["T"]
            budget = samples
            if bound == "dt" and samples is None:
                budget = 200_000
            base = PointConfig(bound, PRESET_SNR_DB, T_values[0], grid["n"], PRESET_EPSILON,
                               budget, seed)
            rows.extend(sweep_T(base, T_values, workers))
        else:
            base = PointConfig(bound, PRESET_SNR_DB, grid["T"], grid["n"][0], PRESET_EPSILON,
                               samples, seed)
            rows.extend(sweep_n(base, grid["n"], workers))
    return rows


# ---------------------------------------------------------------------------
# argparse front-end

def _parse_range(text: str) -> list[int]:
    parts = [int(p) for p in text.split(":")]
    if len(parts) == 2:
        parts.append(1)
    if len(parts) != 3 or parts[2] <= 0:
        raise argparse.ArgumentTypeError("expected lo:hi[:step]")
    lo, hi, step = parts
    return list(range(lo, hi + 1, step))


def _parse_list(text: str) -> list[int]:
    return [int(float(p)) for p in text.replace(",", " ").split()]


def read_config(path) -> dict:
    """``key=value`` lines mirroring the long flags; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="blockfade",
        description="Finite block-length rate bounds for noncoherent Rayleigh block fading.")
    ap.add_argument("--config", help="key=value file; command-line flags override it")
    ap.add_argument("--snr-db", type=float, default=10.0)
    ap.add_argument("--T", type=int, default=50)
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--epsilon", type=float, default=1e-3)
    ap.add_argument("--bound", choices=BOUNDS, default=None)
    ap.add_argument("--sweep-T", type=_parse_range, default=None, metavar="LO:HI[:STEP]")
    ap.add_argument("--sweep-n", type=_parse_list, default=None, metavar="N1,N2,...")
    ap.add_argument("--samples", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="-", help="CSV destination ('-' for stdout)")
    ap.add_argument("--preset", choices=("fig1", "fig2", "fig3", "fig4"))
    ap.add_argument("--find-tstar", action="store_true")
    ap.add_argument("--exact", action="store_true",
                    help="use the DT bound instead of its normal approximation for --find-tstar")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def parse_args(argv=None) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        conf = read_config(args.config)
        known = {a.dest: a for a in ap._actions}
        defaults = {}
        for key, value in conf.items():
            if key not in known or key == "config":
                raise UsageError(f"unknown config key {key!r}")
            action = known[key]
            if action.nargs == 0:
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                defaults[key] = action.type(value)
            else:
                defaults[key] = value
        ap.set_defaults(**defaults)
        args = ap.parse_args(argv)
    return args


def run(args: argparse.Namespace) -> tuple[list[SweepRow], Optional[TStar]]:
    tstar = None
    if args.preset:
        rows = preset_figure(args.preset, args.samples, args.seed, workers=args.workers)
        if args.find_tstar and args.preset in ("fig3", "fig4"):
            tstar = find_tstar(rows, "dt" if args.exact else "na_noncoh")
        return rows, tstar
    bound = args.bound or ("dt" if args.exact else "na_noncoh" if args.find_tstar else "C_coh")
    base = PointConfig(bound, args.snr_db, args.T, args.n, args.epsilon, args.samples,
                       args.seed, 1)
    if args.sweep_T:
        rows = sweep_T(base, args.sweep_T, args.workers)
    elif args.sweep_n:
        rows = sweep_n(base, args.sweep_n, args.workers)
    elif args.find_tstar:
        rows = sweep_T(base, range(2, min(200, args.n // 2) + 1), args.workers)
    else:
        rows = [eval_point(replace(base, workers=args.workers))]
    if args.find_tstar:
        tstar = find_tstar(rows, bound)
    return rows, tstar


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"blockfade: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        rows, tstar = run(args)
    except UsageError as exc:
        print(f"blockfade: error: {exc}", file=sys.stderr)
        return 2
    try:
        emit_csv(rows, sys.stdout if args.out == "-" else args.out)
    except OSError as exc:
        print(f"blockfade: error: {exc}", file=sys.stderr)
        return 1
    if tstar is not None:
        print(f"T* = {tstar.T_star} ({tstar.rate_bits_per_cu:.6f} bits/cu, bound {tstar.row.bound})",
              file=sys.stderr)
        if tstar.warning:
            print(f"warning: {tstar.warning}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
