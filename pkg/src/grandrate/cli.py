"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 numerical flag (optimizer bracket
edge, failed validation check).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .bicm import FADINGS, LABELINGS, SCHEMES, FadingModel, bicm_reports, bit_channel, combine, make_constellation
from .experiments import SweepSpec, config_hash, rows_to_csv, run_sweep, validate_all, write_csv, write_gnuplot
from .grand import QueryPlan, WEIGHTINGS, grand_decode, random_linear_code, simulate_bler
from .llr_channel import BpskAwgn, BpskRayleigh, Bsc, psi_cdf, random_inputs, seed_sequence
from .rates import LN2, GmiConfig, rate_report

DEFAULT_SEED = 0xC0FFEE
DEFAULT_SAMPLES = 10**6
CHANNELS = ("bpsk-awgn", "bpsk-rayleigh", "bsc", "bicm")
COMMANDS = ("rate", "psi", "decode", "bler", "sweep", "constellation-dump", "validate")
RATE_KEYS = (
    "i_orbgrand",
    "i_mi",
    "i_sgrand",
    "mc_std_error",
    "integration_abs_err",
    "std_error_orbgrand",
    "std_error_mi",
    "std_error_sgrand",
    "error_budget",
    "total",
    "std_error",
)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class CliConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    samples: int = DEFAULT_SAMPLES
    units: str = "nats"
    output: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.units not in ("nats", "bits"):
            raise UsageError("units must be nats or bits")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must fit in 64 bits")
        if self.samples < 1000:
            raise UsageError("samples must be >= 1000")

    @property
    def config_hash(self) -> str:
        d = asdict(self)
        d.pop("output")
        return config_hash(d)


def _finite(name):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}")
        if not math.isfinite(v):
            raise argparse.ArgumentTypeError(f"{name} must be finite")
        return v

    return conv


def _seed(text):
    return int(text, 0)


def build_parser() -> Parser:
    p = Parser(prog="grandrate", description="Achievable rates and decoding for GRAND decoders.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    def common(sp, samples=True):
        sp.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
        if samples:
            sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
        sp.add_argument("--output", default=None, help="write to this path instead of stdout")

    def channel_args(sp):
        sp.add_argument("--channel", choices=CHANNELS, default="bpsk-awgn")
        sp.add_argument("--snr", type=_finite("snr"), default=3.0, help="SNR in dB")
        sp.add_argument("--p", type=_finite("p"), default=None, help="BSC crossover probability")
        sp.add_argument("--scheme", choices=SCHEMES, default="qpsk")
        sp.add_argument("--labeling", choices=LABELINGS, default="gray")
        sp.add_argument("--fading", choices=FADINGS, default="awgn")
        sp.add_argument("--level", type=int, default=None, help="BICM bit level (1 = MSB); default: all")

    sp = sub.add_parser("rate", help="ORBGRAND/SGRAND GMI and mutual information")
    channel_args(sp)
    sp.add_argument("--units", choices=("nats", "bits"), default="nats")
    sp.add_argument("--method", choices=("auto", "mc", "quadrature"), default="auto")
    sp.add_argument("--workers", type=int, default=1)
    common(sp)

    sp = sub.add_parser("psi", help="cdf of the LLR magnitude")
    channel_args(sp)
    sp.add_argument("--t", type=_finite("t"), nargs="+", default=[0.5 * i for i in range(21)])
    sp.add_argument("--empirical", action="store_true")
    common(sp)

    sp = sub.add_parser("decode", help="decode one random transmission")
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--k", type=int, default=8)
    sp.add_argument("--snr", type=_finite("snr"), default=6.0)
    sp.add_argument("--weighting", choices=WEIGHTINGS, default="rank_over_n")
    sp.add_argument("--max-queries", type=int, default=10**6)
    common(sp, samples=False)

    sp = sub.add_parser("bler", help="block error rate of a random linear code")
    sp.add_argument("--n", type=int, default=128)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--rate-fraction", type=_finite("rate-fraction"), default=None, help="pick k so that k/n*ln2 = fraction * I_ORBGRAND")
    sp.add_argument("--snr", type=_finite("snr"), default=6.0)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--weighting", choices=WEIGHTINGS, default="rank_over_n")
    sp.add_argument("--max-queries", type=int, default=10**6)
    common(sp, samples=False)

    sp = sub.add_parser("sweep", help="run a sweep described by a JSON spec")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--output", default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--gnuplot", action="store_true")

    sp = sub.add_parser("constellation", help="constellation tables")
    csub = sp.add_subparsers(dest="action", required=True, parser_class=Parser)
    dump = csub.add_parser("dump")
    dump.add_argument("--scheme", choices=SCHEMES, default=None)
    dump.add_argument("--labeling", choices=LABELINGS, default=None)

    sp = sub.add_parser("constellation-dump", help="alias of 'constellation dump'")
    sp.add_argument("--scheme", choices=SCHEMES, default=None)
    sp.add_argument("--labeling", choices=LABELINGS, default=None)

    sp = sub.add_parser("validate", help="run the invariant suites")
    sp.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    sp.add_argument("--samples", type=int, default=2 * 10**5)
    return p


def _channel(args):
    if args.channel == "bsc":
        if args.p is None:
            raise UsageError("--p is required for the bsc channel")
        if not 0 < args.p < 0.5:
            raise UsageError(f"--p must lie in (0, 0.5), got {args.p}")
        return Bsc(args.p)
    if args.channel == "bpsk-awgn":
        return BpskAwgn(args.snr)
    if args.channel == "bpsk-rayleigh":
        return BpskRayleigh(args.snr)
    c = make_constellation(args.scheme, args.labeling)
    if args.level is not None and not 1 <= args.level <= c.m:
        raise UsageError(f"--level must lie in 1..{c.m} for {args.scheme}")
    return c


def _to_units(d, units):
    if units == "nats":
        return d
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out[k] = _to_units(v, units)
        elif isinstance(v, list) and k in ("per_level",):
            out[k] = [x / LN2 for x in v]
        elif isinstance(v, list):
            out[k] = [_to_units(x, units) if isinstance(x, dict) else x for x in v]
        elif k in RATE_KEYS and isinstance(v, float):
            out[k] = v / LN2
        else:
            out[k] = v
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _emit(payload, output):
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_rate(args, cfg):
    target = _channel(args)
    gcfg = GmiConfig(n_samples=args.samples, seed=args.seed, method=args.method, workers=max(1, args.workers))
    if args.channel != "bicm":
        report = rate_report(target, gcfg).to_dict()
        flag = report["bracket_edge"]
    else:
        fading = FadingModel(args.fading, args.snr)
        if args.level is not None:
            lcfg = GmiConfig(**{**gcfg.__dict__, "seed": seed_sequence(args.seed, 100 + args.level)})
            report = rate_report(bit_channel(target, args.level, fading), lcfg).to_dict()
            flag = report["bracket_edge"]
        else:
            reps = bicm_reports(target, fading, gcfg)
            report = {
                "levels": [r.to_dict() for r in reps],
                **{w: asdict(combine(reps, w)) for w in ("orbgrand", "mi", "sgrand")},
            }
            flag = any(r.bracket_edge for r in reps)
    payload = _to_units(report, args.units)
    payload.update(units=args.units, seed=args.seed, config=asdict(cfg), config_hash=cfg.config_hash)
    _emit(payload, args.output)
    return 2 if flag else 0


def _cmd_psi(args, cfg):
    target = _channel(args)
    if args.channel == "bicm":
        target = bit_channel(target, args.level or 1, FadingModel(args.fading, args.snr))
    if args.empirical and args.samples < 10**4:
        raise UsageError("--empirical needs --samples >= 10000")
    cdf = psi_cdf(target, args.samples, args.seed, empirical=args.empirical)
    t = np.asarray(args.t)
    if np.any(t < 0):
        raise UsageError("--t values must be >= 0")
    payload = {"form": cdf.form, "t": t, "psi": cdf(t), "seed": args.seed, "config": asdict(cfg), "config_hash": cfg.config_hash}
    _emit(payload, args.output)
    return 0


def _code_args(args):
    if not 1 <= args.n <= 128:
        raise UsageError("--n must lie in 1..128")
    if args.max_queries < 1:
        raise UsageError("--max-queries must be >= 1")


def _cmd_decode(args, cfg):
    _code_args(args)
    if not 1 <= args.k < args.n:
        raise UsageError("need 1 <= k < n")
    code = random_linear_code(args.n, args.k, args.seed)
    rng = np.random.default_rng(seed_sequence(args.seed, 1))
    word = code.encode(rng.integers(0, 2, size=code.k))
    llrs = BpskAwgn(args.snr).sample_llr(2.0 * word - 1.0, rng)
    out = grand_decode(llrs, code, QueryPlan(args.weighting, args.max_queries))
    payload = {
        "abandoned": out.abandoned,
        "queries": out.queries,
        "metric_value": out.metric_value,
        "correct": (not out.abandoned) and bool(np.array_equal(out.bits, word)),
        "pattern": list(out.pattern),
        "seed": args.seed,
        "config": asdict(cfg),
        "config_hash": cfg.config_hash,
    }
    _emit(payload, args.output)
    return 0


def _cmd_bler(args, cfg):
    _code_args(args)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    k = args.k
    target = None
    if args.rate_fraction is not None:
        if args.rate_fraction <= 0:
            raise UsageError("--rate-fraction must be positive")
        i_orb = rate_report(BpskAwgn(args.snr)).i_orbgrand
        target = args.rate_fraction * i_orb
        k = int(round(args.n * target / LN2))
    if k is None:
        raise UsageError("give --k or --rate-fraction")
    if not 1 <= k < args.n:
        raise UsageError(f"code dimension k={k} must satisfy 1 <= k < n={args.n}")
    code = random_linear_code(args.n, k, args.seed)
    res = simulate_bler(code, BpskAwgn(args.snr), QueryPlan(args.weighting, args.max_queries), args.trials, seed_sequence(args.seed, 1))
    payload = {
        "n": args.n,
        "k": k,
        "target_rate_nats": target,
        "bler": res.bler,
        "std_error": res.std_error,
        "abandoned": res.abandoned,
        "undetected": res.undetected,
        "trials": res.trials,
        "mean_queries": res.mean_queries,
        "seed": args.seed,
        "config": asdict(cfg),
        "config_hash": cfg.config_hash,
    }
    _emit(payload, args.output)
    return 0


def _cmd_sweep(args):
    try:
        with open(args.spec, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read spec {args.spec}: {e}")
    if args.output:
        raw["output"] = args.output
    if args.workers is not None:
        raw["workers"] = args.workers
    try:
        spec = SweepSpec(**raw)
    except (TypeError, ValueError) as e:
        raise UsageError(f"invalid sweep spec: {e}")
    rows = run_sweep(spec, gnuplot=args.gnuplot)
    if not spec.output:
        sys.stdout.write(rows_to_csv(rows))
    flagged = any(r.metric == "bracket_edge" and r.value for r in rows)
    return 2 if flagged else 0


def _cmd_constellation(args):
    schemes = [args.scheme] if args.scheme else list(SCHEMES)
    labelings = [args.labeling] if args.labeling else list(LABELINGS)
    lines = ["scheme,labeling,label,real,imag"]
    for s in schemes:
        for lab in labelings:
            for bits, re, im in make_constellation(s, lab).table():
                lines.append(f"{s},{lab},{bits},{re:.17g},{im:.17g}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _cmd_validate(args):
    report = validate_all(args.seed, args.samples)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: measured={c.measured:.6g} threshold={c.threshold:.6g} {c.detail}", file=sys.stderr)
    _emit(report.to_dict(), None)
    return 0 if report.passed else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command in ("constellation", "constellation-dump"):
            return _cmd_constellation(args)
        if args.command == "validate":
            return _cmd_validate(args)
        params = {k: v for k, v in vars(args).items() if k not in ("command", "seed", "samples", "units", "output")}
        cfg = CliConfig(
            command=args.command,
            params=params,
            seed=args.seed,
            samples=getattr(args, "samples", DEFAULT_SAMPLES),
            units=getattr(args, "units", "nats"),
            output=args.output,
        )
        handler = {"rate": _cmd_rate, "psi": _cmd_psi, "decode": _cmd_decode, "bler": _cmd_bler}[args.command]
        return handler(args, cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
