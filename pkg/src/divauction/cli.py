"""Command line: ``simulate``, ``sweep`` and ``verify``.

Configs are flat ``key = value`` files (``#`` starts a comment).  Keys:

    M           number of buyers (sweep: comma list)
    T           horizon, an integer or ``2^k`` (sweep: comma list)
    gamma0      seller's discount cap (sweep: comma list)
    r           optional penalization length, at least r_gamma(gamma0)
    valuations  comma list of decimals in [0, 1], or ``random(seed, bits)``
                (valuations k/2^bits drawn from the game seed) or
                ``random(<int>, bits)`` (one fixed draw)
    buyer_mode  one mode for every buyer, or one per buyer (simulate);
                sweep treats a comma list as a grid of uniform modes
    gammas      optional per-buyer discounts, each at most gamma0
    seeds       ``a..b`` (inclusive), a comma list, or one integer
    name        optional output file stem (defaults to the config file stem)

Exit codes: 0 all bounds hold, 1 a bound or check failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Optional, Sequence

from .experiment import GameSpec, grid_valuations, parse_mode, run_many
from .numerics import Dyadic, from_decimal
from .prrfes import ConfigError, r_gamma
from .regret import REPORT_COLUMNS, report_row
from .verify import SUITES, run_suite

__all__ = ["main", "ExperimentConfig", "load_config", "parse_config", "ConfigError"]

OUT_ENV = "DIVAUCTION_OUT"
DEFAULT_OUT = "divauction_out"
VALUATION_BITS = 64
MAX_DP_T = 22

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

KNOWN_KEYS = {"M", "T", "gamma0", "r", "valuations", "buyer_mode", "gammas", "seeds", "name"}

AGGREGATE_COLUMNS = [
    "config_hash", "T", "M", "gamma0", "r", "mode", "games",
    "regret_min", "regret_mean", "regret_max", "avg_regret_mean",
    "bound_theorem1_min", "margin_min", "violations",
]

_RANDOM_RE = re.compile(r"^random\(\s*(seed|\d+)\s*,\s*(\d+)\s*\)$")


@dataclass(frozen=True)
class ExperimentConfig:
    M: tuple
    T: tuple
    gamma0: tuple
    r: Optional[int]
    valuations: object  # tuple of Dyadic, or ("random", stream-or-None, bits)
    buyer_mode: tuple
    gammas: Optional[tuple]
    seeds: tuple
    name: str
    digest: str


def parse_kv(text: str) -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {n}: expected key = value, got {raw.strip()!r}")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        out[key] = value
    return out


def _split(value: str) -> list:
    return [x.strip() for x in value.split(",") if x.strip()]


def _int(text: str, key: str) -> int:
    m = re.fullmatch(r"(\d+)\s*\^\s*(\d+)", text)
    try:
        return int(m.group(1)) ** int(m.group(2)) if m else int(text)
    except ValueError:
        raise ConfigError(f"{key}: not an integer: {text!r}") from None


def _float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text!r}") from None


def _seeds(text: str) -> tuple:
    m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if b < a:
            raise ConfigError(f"seeds: empty range {text!r}")
        return tuple(range(a, b + 1))
    return tuple(_int(x, "seeds") for x in _split(text))


def _valuation(text: str) -> Dyadic:
    try:
        v = from_decimal(text, VALUATION_BITS)
    except ValueError as exc:
        raise ConfigError(f"valuations: {exc}") from None
    if not 0 <= v <= 1:
        raise ConfigError(f"valuations: {text} is outside [0, 1]")
    return v


def _digest(raw: dict) -> str:
    canon = "\n".join(f"{k}={' '.join(raw[k].split())}" for k in sorted(raw))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def parse_config(text: str, name: str = "run") -> ExperimentConfig:
    raw = parse_kv(text)
    for key in ("M", "T", "gamma0", "valuations", "buyer_mode"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    Ms = tuple(_int(x, "M") for x in _split(raw["M"]))
    Ts = tuple(_int(x, "T") for x in _split(raw["T"]))
    g0s = tuple(_float(x, "gamma0") for x in _split(raw["gamma0"]))
    if not Ms or min(Ms) < 1:
        raise ConfigError("M must be a positive integer")
    if not Ts or min(Ts) < 1:
        raise ConfigError("T must be a positive integer")
    for g in g0s:
        if not 0 < g < 1:
            raise ConfigError(f"gamma0 must lie in (0, 1), got {g}")
    r = _int(raw["r"], "r") if raw.get("r") else None
    if r is not None:
        for g in g0s:
            if r < r_gamma(g):
                raise ConfigError(f"r={r} is below the minimum r_gamma({g}) = {r_gamma(g)}")
    vtext = raw["valuations"].strip()
    m = _RANDOM_RE.match(vtext)
    if m:
        stream = None if m.group(1) == "seed" else int(m.group(1))
        valuations = ("random", stream, int(m.group(2)))
    else:
        valuations = tuple(_valuation(x) for x in _split(vtext))
        if len(Ms) != 1 or len(valuations) != Ms[0]:
            raise ConfigError(f"valuations: {len(valuations)} values for M={raw['M']}")
    modes = tuple(_split(raw["buyer_mode"]))
    for mode in modes:
        try:
            parse_mode(mode)
        except ValueError as exc:
            raise ConfigError(f"buyer_mode: {exc}") from None
    gammas = None
    if raw.get("gammas"):
        gammas = tuple(_float(x, "gammas") for x in _split(raw["gammas"]))
        for g in gammas:
            if not 0 < g <= min(g0s):
                raise ConfigError(f"gammas: each buyer discount must lie in (0, gamma0], got {g}")
    seeds = _seeds(raw.get("seeds", "0"))
    if not seeds:
        raise ConfigError("seeds: no seeds given")
    return ExperimentConfig(Ms, Ts, g0s, r, valuations, modes, gammas, seeds, raw.get("name", name), _digest(raw))


def load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, Path(path).stem)


def _valuations_for(cfg: ExperimentConfig, M: int, seed: int) -> tuple:
    v = cfg.valuations
    if isinstance(v, tuple) and v and v[0] == "random":
        _, stream, bits = v
        return tuple(grid_valuations(seed if stream is None else stream, M, bits))
    return v


def _check_dp(mode: str, M: int, T: int) -> None:
    if parse_mode(mode)[0] == "dp_optimal" and (M != 1 or T > MAX_DP_T):
        raise ConfigError(f"dp_optimal needs M=1 and T <= {MAX_DP_T}, got M={M}, T={T}")


def simulate_specs(cfg: ExperimentConfig) -> list:
    if len(cfg.M) != 1 or len(cfg.T) != 1 or len(cfg.gamma0) != 1:
        raise ConfigError("simulate takes a single M, T and gamma0; use sweep for grids")
    M, T, g0 = cfg.M[0], cfg.T[0], cfg.gamma0[0]
    modes = cfg.buyer_mode * M if len(cfg.buyer_mode) == 1 else cfg.buyer_mode
    if len(modes) != M:
        raise ConfigError(f"buyer_mode: {len(cfg.buyer_mode)} modes for M={M}")
    for mode in modes:
        _check_dp(mode, M, T)
    if cfg.gammas is not None and len(cfg.gammas) != M:
        raise ConfigError(f"gammas: {len(cfg.gammas)} values for M={M}")
    return [
        GameSpec(M, T, g0, _valuations_for(cfg, M, s), modes, s, cfg.r, cfg.gammas, keep_trace=True)
        for s in cfg.seeds
    ]


def sweep_specs(cfg: ExperimentConfig) -> list:
    if cfg.gammas is not None:
        raise ConfigError("sweep does not take per-buyer gammas")
    specs = []
    for T, M, g0, mode in itertools.product(cfg.T, cfg.M, cfg.gamma0, cfg.buyer_mode):
        _check_dp(mode, M, T)
        for s in cfg.seeds:
            specs.append(GameSpec(M, T, g0, _valuations_for(cfg, M, s), (mode,) * M, s, cfg.r))
    return specs


def _mode_label(modes: Sequence[str]) -> str:
    return modes[0] if len(set(modes)) == 1 else ";".join(modes)


def _row(cfg: ExperimentConfig, res) -> list:
    s = res.spec
    return report_row(res.report, config_hash=cfg.digest, seed=s.seed, T=s.T, M=s.M, r=res.r,
                      gamma0=s.gamma0, mode=_mode_label(s.modes), valuations=s.valuations)


def _violations(res) -> list:
    return res.report.failures()


def _out_dir(arg: Optional[str]) -> Path:
    out = Path(arg or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header: list, rows: list) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    specs = simulate_specs(cfg)
    results = run_many(specs, args.workers)
    out = _out_dir(args.out)
    failed = []
    for res in results:
        path = out / f"{cfg.name}_seed{res.spec.seed}_trace.csv"
        with path.open("w", newline="") as fh:
            res.trace.to_csv(fh)
        for flag in _violations(res):
            failed.append((res.spec.seed, flag))
    report_path = out / f"{cfg.name}_report.csv"
    _write_csv(report_path, REPORT_COLUMNS, [_row(cfg, res) for res in results])
    if not args.quiet:
        for res in results:
            rep = res.report
            subs = ",".join(map(str, rep.subhorizons))
            print(f"seed {res.spec.seed}: regret {rep.total} (bound {rep.bound_theorem1}), subhorizons {subs}")
        print(f"wrote {len(results)} trace(s) and {report_path}")
    for seed, flag in failed:
        print(f"bound violated: seed {seed}, {flag}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def aggregate_rows(cfg: ExperimentConfig, results: Sequence) -> list:
    cells: dict = {}
    for res in results:
        s = res.spec
        cells.setdefault((s.T, s.M, s.gamma0, _mode_label(s.modes)), []).append(res)
    rows = []
    for (T, M, g0, mode), group in cells.items():
        totals = [float(res.report.total) for res in group]
        bounds = [res.report.bound_theorem1 for res in group if res.report.bound_theorem1 is not None]
        margins = [res.report.bound_theorem1 - float(res.report.total) for res in group
                   if res.report.bound_theorem1 is not None]
        rows.append([
            cfg.digest, T, M, g0, group[0].r, mode, len(group),
            repr(min(totals)), repr(fmean(totals)), repr(max(totals)), repr(fmean(totals) / T),
            repr(min(bounds)) if bounds else "", repr(min(margins)) if margins else "",
            sum(1 for res in group if _violations(res)),
        ])
    return rows


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    specs = sweep_specs(cfg)
    results = run_many(specs, args.workers)
    out = _out_dir(args.out)
    games_path = out / f"{cfg.name}_games.csv"
    agg_path = out / f"{cfg.name}_aggregate.csv"
    _write_csv(games_path, REPORT_COLUMNS, [_row(cfg, res) for res in results])
    agg = aggregate_rows(cfg, results)
    _write_csv(agg_path, AGGREGATE_COLUMNS, agg)
    failed = [(res.spec, flag) for res in results for flag in _violations(res)]
    if not args.quiet:
        for row in agg:
            print(f"T={row[1]} M={row[2]} gamma0={row[3]} {row[5]}: max regret {float(row[9]):.4g}, "
                  f"worst margin {row[12]}, violations {row[13]}")
        print(f"wrote {games_path} ({len(results)} games) and {agg_path} ({len(agg)} cells)")
    for spec, flag in failed:
        print(f"bound violated: T={spec.T} M={spec.M} gamma0={spec.gamma0} "
              f"mode={_mode_label(spec.modes)} seed {spec.seed}, {flag}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(args) -> int:
    checks = run_suite(args.suite, args.workers)
    for c in checks:
        if not args.quiet or not c.passed:
            print(c.line())
    ok = all(c.passed for c in checks)
    if not args.quiet:
        print(f"{args.suite}: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="divauction", description="Dividing-seller auction simulations and bound checks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=None, help="parallel games (default: available cores)")
    common.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--quiet", action="store_true", help="print failures only")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common], help="run one game per seed, write trace and report CSVs")
    s.add_argument("config")
    s.set_defaults(func=cmd_simulate)
    w = sub.add_parser("sweep", parents=[common], help="run a grid of games, write per-game and aggregate CSVs")
    w.add_argument("config")
    w.set_defaults(func=cmd_sweep)
    v = sub.add_parser("verify", parents=[common], help="run a built-in invariant suite")
    v.add_argument("suite", choices=SUITES)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
