"""Distributive and asymptotic justice metrics.

The central quantity is each agent's diluted balance minus its diluted
cumulative cashflow. A history is just at step t when that quantity equals
an equal share 1/|V_t| for every agent; it is asymptotically just when the
quantity converges to 1/|V|. For networks, balances and cashflows are
converted to a reference currency through the coin exchange rates before
diluting; arbitrage-freeness makes the result independent of the reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .accounting import History
from .economy import ExchangeRateMatrix
from .errors import BadIndexError, ConditionViolatedError, InvalidRatesError, TooShortError


def justice_value_single(history: History, t: int, v: str) -> float:
    """Diluted balance minus diluted cashflow for a one-currency history.

    Equals 1/|V_t| at every t exactly when the history is just. NaN while
    the currency has no coins.
    """
    if history.k != 1:
        raise ValueError("single-community metric requires exactly one currency")
    total = history.coin_count(t, 1)
    if total == 0:
        return float("nan")
    cashflow = history.cumulative_cashflow(t, v, 1)
    return (history.balance(t, v, 1) - cashflow) / total


def justice_value_network(
    history: History,
    t: int,
    v: str,
    ex: ExchangeRateMatrix,
    reference: int = 1,
) -> float:
    """Share of network value held by v net of its trades, at step t.

    Balances and cashflows of every currency are expressed in the reference
    currency through ``ex`` and divided by the total network value. With one
    currency this reduces to :func:`justice_value_single`.
    """
    if ex.k != history.k:
        raise InvalidRatesError("rate matrix size does not match the history")
    if not 0 <= t <= history.last_step:
        raise BadIndexError(f"step {t} outside history 0..{history.last_step}")
    col = ex.column(reference)
    numerator = 0.0
    denominator = 0.0
    for i in history.currencies:
        weight = col[i - 1]
        cashflow = history.cumulative_cashflow(t, v, i) if t >= 1 else 0
        numerator += (history.balance(t, v, i) - cashflow) * weight
        denominator += history.coin_count(t, i) * weight
    if denominator == 0.0:
        return float("nan")
    return numerator / denominator


def convergence_condition(v1, v2, mrs_limit: float) -> bool:
    """Whether the two-community intersection can absorb the value gap.

    True when |V1 - V2| / |V2| <= mrs_limit <= |V1| / |V2 - V1|; the upper
    bound is unbounded when V2 is contained in V1. Under joint egalitarian
    minting with myopic agents this is the sufficient condition for per-coin
    rates between the two currencies to converge to 1.
    """
    v1, v2 = set(v1), set(v2)
    if not v1 or not v2:
        raise ValueError("both communities must be nonempty")
    if mrs_limit <= 0:
        raise ValueError("the limiting substitution rate must be positive")
    lower = len(v1 - v2) / len(v2)
    only_2 = len(v2 - v1)
    upper = math.inf if only_2 == 0 else len(v1) / only_2
    return lower <= mrs_limit <= upper


def predicted_mint_fraction(v1, v2, mrs_limit: float) -> float:
    """Limiting fraction of steps in which intersection agents mint currency 1.

    The unique x in [0, 1] with
    mrs_limit = (|V1-V2| + x |V1∩V2|) / (|V2-V1| + (1-x) |V1∩V2|);
    also the predicted limit of a_t / t, where a_t counts the steps at which
    currency 1's coin was weakly more valuable.
    """
    v1, v2 = set(v1), set(v2)
    shared = len(v1 & v2)
    if shared == 0:
        raise ConditionViolatedError("communities do not intersect")
    if not convergence_condition(v1, v2, mrs_limit):
        raise ConditionViolatedError(
            f"substitution limit {mrs_limit} outside the feasible band"
        )
    only_1 = len(v1 - v2)
    only_2 = len(v2 - v1)
    return (mrs_limit * (only_2 + shared) - only_1) / (shared * (1.0 + mrs_limit))


@dataclass(frozen=True)
class ConvergenceReport:
    """Trailing-window summary of a metric series."""

    series: tuple
    window: int
    trailing_mean: float
    max_deviation: float  # max |value - trailing_mean| inside the window

    def deviation_from(self, target: float) -> float:
        return abs(self.trailing_mean - target)


def convergence_report(series: Sequence[float], window_frac: float = 0.1) -> ConvergenceReport:
    """Estimate the limit of a series from its trailing window (default 10%)."""
    values = [float(x) for x in series]
    if len(values) < 2:
        raise TooShortError(f"need at least 2 points, got {len(values)}")
    window = max(1, int(len(values) * window_frac))
    tail = values[-window:]
    mean = sum(tail) / len(tail)
    return ConvergenceReport(
        series=tuple(values),
        window=window,
        trailing_mean=mean,
        max_deviation=max(abs(x - mean) for x in tail),
    )


@dataclass
class JusticeReport:
    """Per-agent justice series with trailing-limit estimates.

    ``target`` is the equal share 1/|V| over all agents ever present;
    per-step targets 1/|V_t| are kept alongside for the finite-time notion.
    """

    target: float
    window: int
    series: Mapping           # agent -> list of values, index = step
    step_targets: Sequence    # 1/|V_t| per step
    estimates: dict = field(default_factory=dict)  # agent -> ConvergenceReport

    def max_final_deviation(self) -> float:
        return max(
            abs(values[-1] - self.target) for values in self.series.values()
        )

    def to_summary(self, tolerance: float = 1e-2) -> dict:
        agents = {
            agent: {
                "final": values[-1],
                "final_deviation": abs(values[-1] - self.target),
                "trailing_mean": self.estimates[agent].trailing_mean,
                "trailing_deviation": self.estimates[agent].deviation_from(self.target),
                "pass": abs(values[-1] - self.target) < tolerance,
            }
            for agent, values in self.series.items()
        }
        return {
            "target": self.target,
            "window": self.window,
            "tolerance": tolerance,
            "pass": all(entry["pass"] for entry in agents.values()),
            "agents": agents,
        }


def build_justice_report(
    series: Mapping,
    member_counts: Sequence[int],
    total_agents: int,
    window_frac: float = 0.1,
) -> JusticeReport:
    estimates = {
        agent: convergence_report(values, window_frac)
        for agent, values in series.items()
    }
    window = next(iter(estimates.values())).window if estimates else 0
    return JusticeReport(
        target=1.0 / total_agents,
        window=window,
        series=series,
        step_targets=[1.0 / count if count else float("nan") for count in member_counts],
        estimates=estimates,
    )
