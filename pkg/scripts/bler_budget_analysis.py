#!/usr/bin/env python3
"""Why a query budget caps ORBGRAND's block error rate at n=128.

With Q queries the decoder only reaches rank sets whose rank sum is at most
some W(Q). If the true noise pattern has a larger rank sum the decoder
abandons (or hits a wrong codeword first), so P(rank sum of noise > W(Q)) is
a floor on the BLER regardless of the code rate. This script prints W(Q), the
estimated floor, and a BLER scan over k.
"""

import argparse

import numpy as np

from grandrate.grand import QueryPlan, rank_reliabilities, random_linear_code, simulate_bler
from grandrate.llr_channel import BpskAwgn, seed_sequence
from grandrate.rates import LN2, rate_report


def distinct_partition_counts(n, wmax):
    # q[w] = number of subsets of {1..n} with sum w
    q = np.zeros(wmax + 1, dtype=object)
    q[0] = 1
    for part in range(1, n + 1):
        for w in range(wmax, part - 1, -1):
            q[w] += q[w - part]
    return q


def reach(n, budget):
    """Largest W such that every rank set with sum <= W is queried within the budget."""
    wmax = n * (n + 1) // 2
    cum = np.cumsum(distinct_partition_counts(n, min(wmax, 400)))
    return int(np.searchsorted(cum, budget, side="right")) - 1


def noise_rank_sums(ch, n, trials, seed):
    rng = np.random.default_rng(seed_sequence(seed))
    out = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        x = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        t = ch.sample_llr(x, rng)
        wrong = np.where(t >= 0, 1.0, -1.0) != x
        out[i] = rank_reliabilities(np.abs(t))[wrong].sum()
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--snr", type=float, default=6.0)
    ap.add_argument("--queries", type=int, default=10**6)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--ks", type=int, nargs="+", default=[64, 80, 90, 99, 110])
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    ch = BpskAwgn(args.snr)
    i_orb = rate_report(ch).i_orbgrand
    w = reach(args.n, args.queries)
    sums = noise_rank_sums(ch, args.n, 20 * args.trials, args.seed)
    print(f"I_ORBGRAND = {i_orb:.5f} nats = {i_orb / LN2:.4f} bit")
    for frac in (0.85, 1.15):
        print(f"  {frac} * I -> k/n = {frac * i_orb / LN2:.4f} -> k = {round(args.n * frac * i_orb / LN2)}")
    print(f"Q = {args.queries:.0e}: every rank set with sum <= {w} is queried")
    # the budget also covers part of rank sum w + 1, so the floor lies between these
    print(f"BLER floor from the budget alone: {np.mean(sums > w + 1):.4f} .. {np.mean(sums > w):.4f}")
    print("k   rate(bit)  BLER     abandoned  undetected  mean queries")
    plan = QueryPlan("rank_over_n", args.queries)
    for k in args.ks:
        code = random_linear_code(args.n, k, seed=seed_sequence(args.seed, k))
        r = simulate_bler(code, ch, plan, args.trials, seed_sequence(args.seed, 1000 + k))
        print(f"{k:<4}{k / args.n:<11.4f}{r.bler:<9.4f}{r.abandoned:<11d}{r.undetected:<12d}{r.mean_queries:.0f}")


if __name__ == "__main__":
    main()
