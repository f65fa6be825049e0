"""Minting regimes and per-agent currency choice strategies.

Regimes say who mints how many coins at a step; strategies say, for joint
regimes where each agent mints exactly one coin, in *which* of its
currencies. Ties always break toward the minimum currency index.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

from .economy import ExchangeRateMatrix, PreferenceProfile
from .errors import InvalidRatesError, NotMemberError
from .ledger import Coin, CurrencyNetwork


@dataclass(frozen=True)
class Myopic:
    """Mint the currency whose coin is currently most valuable."""


@dataclass(frozen=True)
class Defensive:
    """Mint the currency the agent currently holds the least of."""


@dataclass(frozen=True)
class Egocentric:
    """Mint the currency with the highest marginal utility for the agent."""


@dataclass(frozen=True)
class FixedCurrency:
    currency: int


@dataclass(frozen=True)
class UniformRandom:
    pass


Strategy = Union[Myopic, Defensive, Egocentric, FixedCurrency, UniformRandom]


@dataclass(frozen=True)
class EqualBirthGrant:
    """Each agent mints a fixed number of coins once, when it joins."""

    coins: int

    def __post_init__(self):
        if self.coins <= 0:
            raise ValueError("birth grant must be positive")


@dataclass(frozen=True)
class EgalitarianSingle:
    """Every member of one community mints one coin per step."""

    community: int


@dataclass(frozen=True)
class JointEgalitarian:
    """Every agent mints exactly one coin per step, in one of its currencies."""

    strategy: Strategy


MintingRegime = Union[EqualBirthGrant, EgalitarianSingle, JointEgalitarian]


def most_valued_coin(rates: ExchangeRateMatrix, memberships: Iterable) -> int:
    """Currency among ``memberships`` whose coin has the highest exchange value.

    The comparison uses one fixed reference column; arbitrage-freeness makes
    the winner independent of which reference is used. Ties go to the
    minimum currency index.
    """
    candidates = sorted(memberships)
    if not candidates:
        raise ValueError("agent has no community to mint in")
    if candidates[-1] > rates.k or candidates[0] < 1:
        raise InvalidRatesError(
            f"membership {candidates} outside the {rates.k}-currency rate matrix"
        )
    best = candidates[0]
    best_value = rates.rate(best, 1)
    for i in candidates[1:]:
        value = rates.rate(i, 1)
        if value > best_value:
            best, best_value = i, value
    return best


def defensive_choice(balances: Mapping, memberships: Iterable) -> int:
    """Currency with the smallest current balance; ties to the minimum index."""
    candidates = sorted(memberships)
    if not candidates:
        raise ValueError("agent has no community to mint in")
    return min(candidates, key=lambda i: (balances.get(i, 0), i))


def egocentric_choice(
    weights: Sequence[float],
    diluted: Sequence[float],
    coin_counts: Sequence[int],
    memberships: Iterable,
) -> int:
    """Currency maximizing the marginal utility of one extra coin.

    For Cobb-Douglas weights the utility gain of one more coin of currency i
    is weight_i / (diluted_i * |C_i|). A zero diluted balance (or an empty
    currency) with positive weight has unbounded gain and wins outright;
    among such currencies the minimum index is chosen.
    """
    candidates = sorted(memberships)
    if not candidates:
        raise ValueError("agent has no community to mint in")
    best = None
    best_gain = -1.0
    for i in candidates:
        w = weights[i - 1]
        if w <= 0.0:
            gain = 0.0
        elif diluted[i - 1] <= 0.0 or coin_counts[i - 1] <= 0:
            gain = float("inf")
        else:
            gain = w / (diluted[i - 1] * coin_counts[i - 1])
        if gain > best_gain:
            best, best_gain = i, gain
    return best


def choose_mint_currency(
    strategy: Strategy,
    agent: str,
    memberships: Sequence[int],
    *,
    rates: Optional[ExchangeRateMatrix] = None,
    weights: Optional[Sequence[float]] = None,
    balances: Optional[Mapping] = None,
    diluted: Optional[Sequence[float]] = None,
    coin_counts: Optional[Sequence[int]] = None,
    rng: Optional[random.Random] = None,
) -> int:
    if isinstance(strategy, Myopic):
        return most_valued_coin(rates, memberships)
    if isinstance(strategy, Defensive):
        return defensive_choice(balances, memberships)
    if isinstance(strategy, Egocentric):
        return egocentric_choice(weights, diluted, coin_counts, memberships)
    if isinstance(strategy, FixedCurrency):
        if strategy.currency not in memberships:
            raise NotMemberError(
                f"{agent!r} cannot mint currency {strategy.currency}: not a member"
            )
        return strategy.currency
    if isinstance(strategy, UniformRandom):
        ordered = sorted(memberships)
        return ordered[rng.randrange(len(ordered))]
    raise TypeError(f"unknown strategy {strategy!r}")


def mint_step(
    network: CurrencyNetwork,
    regime: MintingRegime,
    *,
    rates: Optional[ExchangeRateMatrix] = None,
    prefs: Optional[PreferenceProfile] = None,
    rng: Optional[random.Random] = None,
    joiners: Iterable = (),
):
    """Mint one step's coins and return (new network, minted record).

    ``joiners`` lists the (agent, currency) pairs admitted this step; only
    the birth-grant regime mints for them. The minted record maps
    (agent, currency) to the number of coins that agent created.
    """
    serials = {i: network.next_serial(i) for i in network.currencies}
    minted: dict = {}
    additions: dict = {}

    def mint(agent, i, n=1):
        for _ in range(n):
            additions[Coin(i, serials[i])] = agent
            serials[i] += 1
        key = (agent, i)
        minted[key] = minted.get(key, 0) + n

    if isinstance(regime, EqualBirthGrant):
        for agent, i in sorted(joiners):
            mint(agent, i, regime.coins)
    elif isinstance(regime, EgalitarianSingle):
        for agent in sorted(network.members(regime.community)):
            mint(agent, regime.community)
    elif isinstance(regime, JointEgalitarian):
        memberships = {agent: [] for agent in network.agents}
        for i in network.currencies:
            for agent in network.members(i):
                memberships[agent].append(i)
        balances: dict = {}
        for coin, agent in network.holder.items():
            key = (agent, coin.currency)
            balances[key] = balances.get(key, 0) + 1
        counts = [network.coin_count(i) for i in network.currencies]
        for agent in network.agents:
            mine = memberships[agent]
            if len(mine) == 1 and not isinstance(regime.strategy, FixedCurrency):
                choice = mine[0]
            else:
                strategy = regime.strategy
                diluted = None
                weights = None
                if isinstance(strategy, Egocentric):
                    weights = prefs.weights[agent]
                    diluted = [
                        balances.get((agent, i), 0) / counts[i - 1]
                        if counts[i - 1] else 0.0
                        for i in network.currencies
                    ]
                choice = choose_mint_currency(
                    strategy,
                    agent,
                    mine,
                    rates=rates,
                    weights=weights,
                    balances={i: balances.get((agent, i), 0) for i in mine},
                    diluted=diluted,
                    coin_counts=counts,
                    rng=rng,
                )
            mint(agent, choice)
    else:
        raise TypeError(f"unknown minting regime {regime!r}")

    return network.with_coins(additions), minted
