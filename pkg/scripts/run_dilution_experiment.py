#!/usr/bin/env python3
"""Sweep the single-community dilution scenario over seeds.

Runs the canned one-currency scenario (unequal endowments, per-member
minting, random trades) for several seeds and prints how far each agent's
final share sits from the equal split 1/N. Writes the full metric bundle
for the first seed.
"""
import argparse
import sys

from currencynet import outputs, scenarios
from currencynet.engine import run_scenario


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--steps", type=int, default=10_000)
    parser.add_argument("--out", default="out/dilution")
    args = parser.parse_args()

    worst = 0.0
    for seed in range(args.seeds):
        config = scenarios.single_community_dilution(seed=seed, steps=args.steps)
        result = run_scenario(config)
        finals = result.justice_final()
        n = len(result.history.agents)
        deviation = max(abs(v - 1.0 / n) for v in finals.values())
        worst = max(worst, deviation)
        print(f"seed {seed:2d}: max |share - 1/{n}| = {deviation:.3e}")
        if seed == 0:
            outputs.write_bundle(result, args.out)
            print(f"  bundle written to {args.out}")
    print(f"worst deviation over {args.seeds} seeds: {worst:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
