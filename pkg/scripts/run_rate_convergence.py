#!/usr/bin/env python3
"""Two-community rate convergence, scheduled and preference-driven.

Prints the trailing estimates of the per-coin rate, the fraction of steps
the overlap agents minted currency 1, and each agent's final value share,
for both the exogenous-schedule and the endogenous (equilibrium solver)
variants of the canned overlapping-pair scenario.
"""
import argparse
import sys

from currencynet import outputs, scenarios
from currencynet.engine import run_scenario
from currencynet.justice import convergence_report, predicted_mint_fraction


def describe(result, label):
    ex = convergence_report(result.ex12)
    aot = convergence_report(result.a_over_t)
    print(f"[{label}]")
    print(f"  ex12 trailing mean:  {ex.trailing_mean:.6f}")
    print(f"  a_t/t trailing mean: {aot.trailing_mean:.6f}")
    for agent, value in sorted(result.justice_final().items()):
        print(f"  share({agent}) = {value:.6f}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=10_000)
    parser.add_argument("--endo-steps", type=int, default=20_000)
    parser.add_argument("--out", default="out/rate_convergence")
    args = parser.parse_args()

    x = predicted_mint_fraction({"a", "b", "c"}, {"b", "c", "d"}, 1.5)
    print(f"predicted mint fraction for the scheduled variant: x = {x}")

    result = run_scenario(scenarios.pair_convergence_exogenous(steps=args.steps))
    describe(result, "scheduled rates")
    outputs.write_bundle(result, f"{args.out}/scheduled")

    endo = run_scenario(scenarios.pair_convergence_endogenous(steps=args.endo_steps))
    mrs = [v for _, v in endo.mrs12_series()]
    est = convergence_report(mrs)
    print(
        f"measured substitution rate: {est.trailing_mean:.6f} "
        f"(trailing spread {est.max_deviation:.2e})"
    )
    describe(endo, "preference-driven rates")
    outputs.write_bundle(endo, f"{args.out}/endogenous")
    print(f"bundles written under {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
