#!/usr/bin/env python3
"""Run every sweep scenario and write one CSV (plus gnuplot .dat files) per scenario.

    python3 scripts/reproduce_sweeps.py --out results --samples 1000000 --workers 4
"""

import argparse
import logging
import time
from pathlib import Path

from grandrate.experiments import BICM_GRID, BPSK_GRID, SCENARIOS, SweepSpec, run_sweep


def build_specs(args):
    out = Path(args.out)
    specs = []
    for sc in args.scenarios:
        if sc == "bler":
            grid, extra = [float(s) for s in args.bler_snr], dict(trials=args.trials, code_k=args.code_k)
        elif sc in ("psi_curves", "bpsk_rates"):
            grid, extra = BPSK_GRID, {}
        else:
            grid, extra = BICM_GRID, {}
        specs.append(
            SweepSpec(
                scenario=sc,
                snr_grid_db=grid,
                seed=args.seed,
                n_samples=args.samples,
                output=str(out / f"{sc}.csv"),
                workers=args.workers,
                **extra,
            )
        )
    return specs


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--samples", type=int, default=10**6)
    ap.add_argument("--seed", type=lambda s: int(s, 0), default=0xC0FFEE)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--scenarios", nargs="+", default=[s for s in SCENARIOS if s != "bler"], choices=SCENARIOS)
    ap.add_argument("--bler-snr", nargs="+", default=[4.0, 5.0, 6.0])
    ap.add_argument("--code-k", type=int, default=99)
    ap.add_argument("--trials", type=int, default=10**4)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    for spec in build_specs(args):
        t0 = time.time()
        rows = run_sweep(spec, gnuplot=True)
        logging.info("%s: %d rows in %.1fs -> %s", spec.scenario, len(rows), time.time() - t0, spec.output)


if __name__ == "__main__":
    main()
