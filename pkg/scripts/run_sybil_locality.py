#!/usr/bin/env python3
"""Sybil locality experiment: one genuine community next to an infested one.

Runs the canned two-community ownership scenario and prints per-owner value
shares, network-wide and restricted to the infested currency, showing that
the duplicate owner's advantage stays inside the community that harbours it.
"""
import argparse
import sys

from currencynet import scenarios
from currencynet.engine import run_scenario
from currencynet.identity import OwnershipMap, genuine_subnet, sybil_locality_report


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=10_000)
    args = parser.parse_args()

    config = scenarios.sybil_locality(steps=args.steps)
    result = run_scenario(config)
    ownership = OwnershipMap.from_pairs(config.owners)
    report = sybil_locality_report(result.history, ownership, result.rates_timeline)

    print("genuine communities:", [i for i, ok in report.genuine.items() if ok])
    print("genuine subnet:", genuine_subnet(ownership, result.final_network))
    print(f"{'owner':6} {'network share':>14} {'green share':>12} {'blue share':>11}")
    for person in report.owners:
        shares = report.currency_share_final[person]
        print(
            f"{person:6} {report.final_network_share(person):>14.5f} "
            f"{shares[1]:>12.5f} {shares[2]:>11.5f}"
        )
    ratio = (
        report.currency_share_final["P_s"][2]
        / report.currency_share_final["P_b1"][2]
    )
    print(f"duplicate / genuine blue-owner share ratio: {ratio:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
