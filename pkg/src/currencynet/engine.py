"""Scenario orchestration: joins, minting, rate updates, metric collection.

A run executes steps 1..T. Each step processes scheduled joins, mints per
the configured regime using the rates in force, applies optional random
trade noise, and, on equilibration steps, recomputes exchange rates (and
optionally settles trades toward the equilibrium allocation). Rates in
force at step t are always the ones computed at the latest equilibration
strictly before t; before the first equilibration they are all ones.

Runs are deterministic: one seeded generator drives every random choice,
agents are always iterated in sorted order, and no set iteration order
leaks into results.
"""
from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .accounting import History, HistoryStep
from .economy import (
    ExchangeRateMatrix,
    coin_exchange_rates,
    largest_remainder_targets,
    mrs_matrix,
    solve_equilibrium,
)
from .errors import ConfigError, CurrencyNetError
from .justice import (
    JusticeReport,
    build_justice_report,
    convergence_condition,
    predicted_mint_fraction,
)
from .ledger import Coin, CurrencyCommunity, CurrencyNetwork
from .minting import (
    Defensive,
    Egocentric,
    EgalitarianSingle,
    EqualBirthGrant,
    FixedCurrency,
    JointEgalitarian,
    Myopic,
    UniformRandom,
    most_valued_coin,
    choose_mint_currency,
)

REGIME_TAGS = (
    "equal_birth_grant",
    "egalitarian_single",
    "joint_myopic",
    "joint_defensive",
    "joint_egocentric",
    "joint_random",
)


@dataclass(frozen=True)
class Diagnostic:
    level: str   # "error" | "warning" | "info"
    code: str
    message: str


@dataclass(frozen=True)
class CommunityConfig:
    index: int
    members: tuple
    initial_coins: Mapping = field(default_factory=dict)  # agent -> coin count


@dataclass(frozen=True)
class MrsSchedule:
    """Scalar substitution-rate schedule for exogenous two-currency runs."""

    kind: str            # constant | exp_approach | table
    value: float = 1.0   # the limit
    start: float = 1.0
    tau: float = 1.0
    points: tuple = ()   # table mode: ((step, value), ...) sorted

    def at(self, t: int) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "exp_approach":
            return self.value + (self.start - self.value) * math.exp(-t / self.tau)
        current = self.points[0][1]
        for step, value in self.points:
            if step <= t:
                current = value
            else:
                break
        return current

    @property
    def limit(self) -> float:
        if self.kind == "table":
            return self.points[-1][1]
        return self.value

    @classmethod
    def from_dict(cls, data: Mapping) -> "MrsSchedule":
        kind = data.get("kind", "constant")
        if kind == "constant":
            return cls(kind="constant", value=float(data["value"]))
        if kind == "exp_approach":
            return cls(
                kind="exp_approach",
                value=float(data["limit"]),
                start=float(data["start"]),
                tau=float(data.get("tau", 1.0)),
            )
        if kind == "table":
            points = tuple(sorted((int(s), float(v)) for s, v in data["points"]))
            if not points:
                raise ConfigError("table schedule needs at least one point")
            return cls(kind="table", points=points)
        raise ConfigError(f"unknown schedule kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "exp_approach":
            return {
                "kind": "exp_approach",
                "limit": self.value,
                "start": self.start,
                "tau": self.tau,
            }
        return {"kind": "table", "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class RatesConfig:
    mode: str = "endogenous"         # endogenous | exogenous
    tol: float = 1e-12
    max_iter: int = 5000
    mrs12: Optional[MrsSchedule] = None
    mrs_matrix: Optional[tuple] = None  # constant full matrix, rows as tuples

    @classmethod
    def from_dict(cls, data: Mapping) -> "RatesConfig":
        mode = data.get("mode", "endogenous")
        if mode == "endogenous":
            return cls(
                mode=mode,
                tol=float(data.get("tol", 1e-12)),
                max_iter=int(data.get("max_iter", 5000)),
            )
        if mode == "exogenous":
            mrs12 = data.get("mrs12")
            matrix = data.get("mrs_matrix")
            return cls(
                mode=mode,
                mrs12=MrsSchedule.from_dict(mrs12) if mrs12 else None,
                mrs_matrix=tuple(tuple(float(x) for x in row) for row in matrix)
                if matrix
                else None,
            )
        raise ConfigError(f"unknown rates mode {mode!r}")

    def to_dict(self) -> dict:
        if self.mode == "endogenous":
            return {"mode": "endogenous", "tol": self.tol, "max_iter": self.max_iter}
        out: dict = {"mode": "exogenous"}
        if self.mrs12 is not None:
            out["mrs12"] = self.mrs12.to_dict()
        if self.mrs_matrix is not None:
            out["mrs_matrix"] = [list(row) for row in self.mrs_matrix]
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    communities: tuple
    steps: int
    seed: int
    regime: str
    name: str = "scenario"
    grant: Optional[int] = None
    community: Optional[int] = None
    joins: Mapping = field(default_factory=dict)  # step -> ((agent, currency), ...)
    join_grant: int = 0
    rates: RatesConfig = field(default_factory=RatesConfig)
    k_eq: int = 1
    settlement: bool = False
    trade_noise: int = 0
    preferences: Optional[Mapping] = None           # agent -> {currency: weight}
    preferences_initial: Optional[Mapping] = None
    t_fix: int = 0
    owners: tuple = ()
    snapshot_interval: int = 0
    final_snapshot: bool = True

    @property
    def k(self) -> int:
        return len(self.communities)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ScenarioConfig":
        try:
            communities = tuple(
                CommunityConfig(
                    index=int(entry["index"]),
                    members=tuple(entry["members"]),
                    initial_coins={
                        str(agent): int(n)
                        for agent, n in entry.get("initial_coins", {}).items()
                    },
                )
                for entry in data["communities"]
            )
            joins = {
                int(step): tuple((str(agent), int(cur)) for agent, cur in entries)
                for step, entries in data.get("joins", {}).items()
            }
            prefs = data.get("preferences")
            prefs_initial = data.get("preferences_initial")
            return cls(
                name=str(data.get("name", "scenario")),
                communities=communities,
                steps=int(data["steps"]),
                seed=int(data["seed"]),
                regime=str(data["regime"]),
                grant=int(data["grant"]) if "grant" in data else None,
                community=int(data["community"]) if "community" in data else None,
                joins=joins,
                join_grant=int(data.get("join_grant", 0)),
                rates=RatesConfig.from_dict(data.get("rates", {})),
                k_eq=int(data.get("k_eq", 1)),
                settlement=bool(data.get("settlement", False)),
                trade_noise=int(data.get("trade_noise", 0)),
                preferences=_parse_weights(prefs) if prefs else None,
                preferences_initial=_parse_weights(prefs_initial) if prefs_initial else None,
                t_fix=int(data.get("t_fix", 0)),
                owners=tuple(
                    (str(p), str(a)) for p, a in data.get("owners", [])
                ),
                snapshot_interval=int(data.get("snapshot_interval", 0)),
                final_snapshot=bool(data.get("final_snapshot", True)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed scenario: {exc}") from exc

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "communities": [
                {
                    "index": cc.index,
                    "members": list(cc.members),
                    "initial_coins": dict(sorted(cc.initial_coins.items())),
                }
                for cc in self.communities
            ],
            "steps": self.steps,
            "seed": self.seed,
            "regime": self.regime,
            "joins": {
                str(step): [list(entry) for entry in entries]
                for step, entries in sorted(self.joins.items())
            },
            "join_grant": self.join_grant,
            "rates": self.rates.to_dict(),
            "k_eq": self.k_eq,
            "settlement": self.settlement,
            "trade_noise": self.trade_noise,
            "t_fix": self.t_fix,
            "owners": [list(pair) for pair in self.owners],
            "snapshot_interval": self.snapshot_interval,
            "final_snapshot": self.final_snapshot,
        }
        if self.grant is not None:
            out["grant"] = self.grant
        if self.community is not None:
            out["community"] = self.community
        if self.preferences is not None:
            out["preferences"] = _dump_weights(self.preferences)
        if self.preferences_initial is not None:
            out["preferences_initial"] = _dump_weights(self.preferences_initial)
        return out


def _parse_weights(data: Mapping) -> dict:
    return {
        str(agent): {int(cur): float(w) for cur, w in row.items()}
        for agent, row in data.items()
    }


def _dump_weights(weights: Mapping) -> dict:
    return {
        agent: {str(cur): w for cur, w in sorted(row.items())}
        for agent, row in sorted(weights.items())
    }


def load_scenario(path) -> ScenarioConfig:
    with open(path) as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return ScenarioConfig.from_dict(data)


def config_hash(config: ScenarioConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def parse_regime(config: ScenarioConfig):
    tag = config.regime
    if tag == "equal_birth_grant":
        if config.grant is None:
            raise ConfigError("equal_birth_grant requires 'grant'")
        return EqualBirthGrant(config.grant)
    if tag == "egalitarian_single":
        return EgalitarianSingle(config.community if config.community is not None else 1)
    if tag == "joint_myopic":
        return JointEgalitarian(Myopic())
    if tag == "joint_defensive":
        return JointEgalitarian(Defensive())
    if tag == "joint_egocentric":
        return JointEgalitarian(Egocentric())
    if tag == "joint_random":
        return JointEgalitarian(UniformRandom())
    if tag.startswith("joint_fixed:"):
        return JointEgalitarian(FixedCurrency(int(tag.split(":", 1)[1])))
    raise ConfigError(
        f"unknown regime tag {tag!r}; expected one of "
        f"{', '.join(REGIME_TAGS)} or joint_fixed:<i>"
    )


# --------------------------------------------------------------------------
# validation


def _eventual_members(config: ScenarioConfig) -> dict:
    members = {cc.index: set(cc.members) for cc in config.communities}
    for entries in config.joins.values():
        for agent, cur in entries:
            if cur in members:
                members[cur].add(agent)
    return members


def _mask_weights(source: Optional[Mapping], memberships: Mapping, k: int) -> dict:
    """Resolve per-agent weight tuples against *current* memberships.

    Configured weights are masked to the agent's memberships and
    renormalized; agents without usable weights get uniform weights over
    their memberships. This keeps the zero-outside-membership invariant
    even when an agent's configured weights mention currencies it only
    joins later.
    """
    out = {}
    for agent in sorted(memberships):
        mine = sorted(memberships[agent])
        row = source.get(agent) if source else None
        weights = None
        if row:
            masked = [
                float(row.get(i, 0.0)) if i in mine else 0.0
                for i in range(1, k + 1)
            ]
            total = sum(masked)
            if total > 0.0:
                weights = [w / total for w in masked]
        if weights is None:
            weights = [0.0] * k
            for i in mine:
                weights[i - 1] = 1.0 / len(mine)
        out[agent] = tuple(weights)
    return out


def _membership_index(members_by_currency: Mapping) -> dict:
    memberships: dict = {}
    for i, agents in members_by_currency.items():
        for agent in agents:
            memberships.setdefault(agent, set()).add(i)
    return memberships


def validate_config(config: ScenarioConfig) -> list:
    """Static checks plus applicability notes; errors make a config unrunnable."""
    diags: list = []

    def err(code, msg):
        diags.append(Diagnostic("error", code, msg))

    def warn(code, msg):
        diags.append(Diagnostic("warning", code, msg))

    def info(code, msg):
        diags.append(Diagnostic("info", code, msg))

    k = config.k
    indices = [cc.index for cc in config.communities]
    if indices != list(range(1, k + 1)):
        err("communities", f"community indices must be 1..k in order, got {indices}")
        return diags
    if config.steps < 1:
        err("steps", "total steps must be at least 1")
    if config.k_eq < 1:
        err("k_eq", "equilibration interval must be at least 1")
    if config.trade_noise < 0:
        err("trade_noise", "trade noise count cannot be negative")
    if config.snapshot_interval < 0:
        err("snapshot_interval", "snapshot interval cannot be negative")
    for cc in config.communities:
        if not cc.members:
            err("members", f"community {cc.index} has no members")
        bad = set(cc.initial_coins) - set(cc.members)
        if bad:
            err("initial_coins", f"community {cc.index}: coins for non-members {sorted(bad)}")

    try:
        regime = parse_regime(config)
    except ConfigError as exc:
        err("regime", str(exc))
        regime = None

    if isinstance(regime, EgalitarianSingle) and not 1 <= regime.community <= k:
        err("regime", f"egalitarian_single targets unknown community {regime.community}")
    if isinstance(regime, JointEgalitarian) and isinstance(regime.strategy, FixedCurrency):
        if not 1 <= regime.strategy.currency <= k:
            err("regime", f"joint_fixed targets unknown community {regime.strategy.currency}")
    if isinstance(regime, EqualBirthGrant):
        warn(
            "bounded_minting",
            "birth-grant minting is bounded: initial endowments are never diluted, "
            "so convergence of the justice metric is not expected",
        )

    members_now = {cc.index: set(cc.members) for cc in config.communities}
    for step in sorted(config.joins):
        if step < 1:
            err("joins", f"join scheduled at step {step}; steps start at 1")
        if step > config.steps:
            warn("joins", f"join at step {step} is beyond the run ({config.steps} steps)")
        for agent, cur in config.joins[step]:
            if cur not in members_now:
                err("joins", f"join of {agent!r} targets unknown community {cur}")
            elif agent in members_now[cur]:
                err("joins", f"{agent!r} joins community {cur} twice")
            else:
                members_now[cur].add(agent)

    rates = config.rates
    if rates.mode == "exogenous":
        if config.settlement:
            err("settlement", "settlement requires endogenous rates")
        if k == 2:
            if rates.mrs12 is None and rates.mrs_matrix is None:
                err("rates", "exogenous mode needs an mrs12 schedule or an mrs_matrix")
        elif k >= 2 and rates.mrs_matrix is None:
            err("rates", "exogenous mode with k != 2 needs a full mrs_matrix")
        if rates.mrs12 is not None and rates.mrs12.limit <= 0:
            err("rates", "substitution schedule limit must be positive")
        if rates.mrs_matrix is not None:
            matrix = np.array(rates.mrs_matrix)
            if matrix.shape != (k, k):
                err("rates", f"mrs_matrix must be {k}x{k}")
            else:
                try:
                    coin_exchange_rates(matrix, [1] * k)
                except CurrencyNetError as exc:
                    err("rates", f"invalid mrs_matrix: {exc}")
    else:
        if rates.tol <= 0 or rates.max_iter < 1:
            err("rates", "endogenous solver needs tol > 0 and max_iter >= 1")

    needs_prefs = rates.mode == "endogenous" or config.regime == "joint_egocentric"
    eventual = _eventual_members(config)
    if needs_prefs and k >= 1:
        source = config.preferences or {}
        memberships: dict = {}
        for i, agents in eventual.items():
            for agent in agents:
                memberships.setdefault(agent, set()).add(i)
        defaulted = sorted(set(memberships) - set(source))
        if defaulted:
            info(
                "preferences",
                f"agents without explicit weights get uniform weights over their "
                f"memberships: {defaulted}",
            )
        for agent, row in sorted(source.items()):
            if agent not in memberships:
                warn("preferences", f"weights given for unknown agent {agent!r}")
                continue
            total = sum(row.values())
            if any(w < 0 for w in row.values()) or abs(total - 1.0) > 1e-9:
                err("preferences", f"weights of {agent!r} must be nonnegative and sum to 1")
            outside = [i for i, w in row.items() if w > 0 and i not in memberships[agent]]
            if outside:
                err(
                    "preferences",
                    f"{agent!r} puts weight on currencies it never joins: {outside}",
                )
        if not [d for d in diags if d.level == "error"]:
            # the first equilibration sees only the initial membership
            initial_members = {cc.index: frozenset(cc.members) for cc in config.communities}
            resolved = _mask_weights(source, _membership_index(initial_members), k)
            for i in range(1, k + 1):
                total = sum(
                    resolved[agent][i - 1]
                    for agent in initial_members[i]
                    if agent in resolved
                )
                if total <= 0:
                    err(
                        "degenerate_economy",
                        f"currency {i} carries zero weight from every initial member",
                    )

    for cc in config.communities:
        if sum(cc.initial_coins.values()) == 0:
            warn(
                "empty_currency",
                f"currency {cc.index} starts without coins; rate updates are "
                f"deferred until every currency has been minted",
            )

    if k == 1 and isinstance(regime, EgalitarianSingle):
        info(
            "dilution",
            "single community with unbounded egalitarian minting and bounded "
            "membership: per-agent shares converge to the equal split",
        )
    if k == 2 and rates.mode == "exogenous" and rates.mrs12 is not None:
        limit = rates.mrs12.limit
        v1 = eventual.get(1, set())
        v2 = eventual.get(2, set())
        if v1 and v2:
            if convergence_condition(v1, v2, limit):
                if v1 & v2:
                    x = predicted_mint_fraction(v1, v2, limit)
                    info(
                        "convergence",
                        f"intersection condition holds; predicted mint fraction x = {x:.6g}",
                    )
            else:
                upper = math.inf if not v2 - v1 else len(v1) / len(v2 - v1)
                warn(
                    "convergence",
                    f"condition violated: substitution limit {limit} outside "
                    f"[{len(v1 - v2) / len(v2):.6g}, {upper:.6g}]; "
                    f"1:1 rates are not expected",
                )
    return diags


# --------------------------------------------------------------------------
# run artifacts


@dataclass(frozen=True)
class RatesEvent:
    t: int
    mrs: tuple            # row tuples
    ex: tuple
    prices: Optional[tuple] = None


@dataclass(frozen=True)
class SolverEvent:
    t: int
    iterations: int
    residual: float
    prices: tuple


@dataclass
class RunResult:
    config: ScenarioConfig
    history: History
    diagnostics: list
    rates_timeline: list          # index = step t; matrix in force at t
    rates_log: list               # RatesEvent per equilibration
    solver_log: list              # SolverEvent per endogenous equilibration
    ex12: Optional[list]          # in-force rate 1->2 per step, index t-1
    a_over_t: Optional[list]      # fraction of steps with ex12 >= 1, index t-1
    final_network: CurrencyNetwork

    def mrs12_series(self) -> list:
        return [(event.t, event.mrs[0][1]) for event in self.rates_log]

    def justice_series(self, reference: int = 1) -> dict:
        """Per-agent series of the justice value, index = step (0..T)."""
        history = self.history
        agents = history.agents
        currencies = list(history.currencies)
        k = history.k
        cashflow = {(a, i): 0 for a in agents for i in currencies}
        out = {a: [] for a in agents}
        for t, step in enumerate(history.steps):
            if t >= 1:
                for key, amount in step.revenue.items():
                    cashflow[key] += amount
                for key, amount in step.expenses.items():
                    cashflow[key] -= amount
            if k == 1:
                total = step.coin_counts[1]
                for a in agents:
                    value = (
                        (step.balances.get((a, 1), 0) - cashflow[(a, 1)]) / total
                        if total
                        else float("nan")
                    )
                    out[a].append(value)
            else:
                col = self.rates_timeline[t].column(reference)
                weights = [float(col[i - 1]) for i in currencies]
                denominator = sum(
                    step.coin_counts[i] * weights[i - 1] for i in currencies
                )
                for a in agents:
                    if denominator:
                        value = (
                            sum(
                                (step.balances.get((a, i), 0) - cashflow[(a, i)])
                                * weights[i - 1]
                                for i in currencies
                            )
                            / denominator
                        )
                    else:
                        value = float("nan")
                    out[a].append(value)
        return out

    def justice_final(self, reference: int = 1) -> dict:
        """Per-agent justice value at the final step, in one sparse pass."""
        history = self.history
        agents = history.agents
        currencies = list(history.currencies)
        cashflow: dict = {}
        for step in history.steps[1:]:
            for key, amount in step.revenue.items():
                cashflow[key] = cashflow.get(key, 0) + amount
            for key, amount in step.expenses.items():
                cashflow[key] = cashflow.get(key, 0) - amount
        final = history.steps[-1]
        out = {}
        if history.k == 1:
            total = final.coin_counts[1]
            for a in agents:
                net = final.balances.get((a, 1), 0) - cashflow.get((a, 1), 0)
                out[a] = net / total if total else float("nan")
            return out
        col = self.rates_timeline[-1].column(reference)
        weights = [float(col[i - 1]) for i in currencies]
        denominator = sum(
            final.coin_counts[i] * weights[i - 1] for i in currencies
        )
        for a in agents:
            net = sum(
                (final.balances.get((a, i), 0) - cashflow.get((a, i), 0))
                * weights[i - 1]
                for i in currencies
            )
            out[a] = net / denominator if denominator else float("nan")
        return out

    def justice_report(self, window_frac: float = 0.1, reference: int = 1) -> JusticeReport:
        series = self.justice_series(reference)
        counts = [
            self.history.member_count(t) for t in range(self.history.last_step + 1)
        ]
        return build_justice_report(series, counts, len(self.history.agents), window_frac)


# --------------------------------------------------------------------------
# the run loop


def initial_network(config: ScenarioConfig) -> CurrencyNetwork:
    holder = {}
    communities = []
    for cc in config.communities:
        serial = 0
        coins = set()
        for agent in sorted(cc.initial_coins):
            for _ in range(cc.initial_coins[agent]):
                coin = Coin(cc.index, serial)
                serial += 1
                coins.add(coin)
                holder[coin] = agent
        communities.append(
            CurrencyCommunity(cc.index, frozenset(cc.members), frozenset(coins))
        )
    return CurrencyNetwork(tuple(communities), holder)


def run_scenario(config: ScenarioConfig) -> RunResult:
    diagnostics = validate_config(config)
    errors = [d for d in diagnostics if d.level == "error"]
    if errors:
        raise ConfigError("; ".join(f"{d.code}: {d.message}" for d in errors))
    regime = parse_regime(config)
    rng = random.Random(config.seed)
    k = config.k
    currencies = list(range(1, k + 1))
    endogenous = config.rates.mode == "endogenous"

    members = {cc.index: set(cc.members) for cc in config.communities}
    members_frozen = {i: frozenset(members[i]) for i in currencies}
    member_tuple = {i: tuple(sorted(members[i])) for i in currencies}

    def membership_of(agent):
        return tuple(i for i in currencies if agent in members[i])

    agents = sorted({a for who in members.values() for a in who})
    memberships = {a: membership_of(a) for a in agents}

    # engine-internal coins are bare (currency, serial) tuples; they become
    # Coin values only when a snapshot is materialized
    holder: dict = {}
    holdings: dict = {}
    balance: dict = {}
    coins_by = {i: [] for i in currencies}
    count = {i: 0 for i in currencies}

    for a in agents:
        for i in memberships[a]:
            balance[(a, i)] = 0
            holdings[(a, i)] = {}

    def mint_coin(agent, i):
        coin = (i, count[i])
        count[i] += 1
        coins_by[i].append(coin)
        holder[coin] = agent
        holdings[(agent, i)][coin] = None
        balance[(agent, i)] += 1

    for cc in config.communities:
        for agent in sorted(cc.initial_coins):
            for _ in range(cc.initial_coins[agent]):
                mint_coin(agent, cc.index)

    def materialize():
        communities = tuple(
            CurrencyCommunity(
                i, members_frozen[i], frozenset(Coin(*c) for c in coins_by[i])
            )
            for i in currencies
        )
        return CurrencyNetwork(
            communities, {Coin(*coin): agent for coin, agent in holder.items()}
        )

    history = History(materialize())

    raw_post = config.preferences
    raw_pre = config.preferences_initial
    weights_cache: dict = {}
    membership_epoch = 0

    def weights_at(t):
        phase = 0 if (raw_pre is not None and t < config.t_fix) else 1
        key = (membership_epoch, phase)
        cached = weights_cache.get(key)
        if cached is None:
            source = raw_pre if phase == 0 else raw_post
            cached = _mask_weights(source, memberships, k)
            weights_cache[key] = cached
        return cached

    rates = ExchangeRateMatrix.ones(k)
    prices_warm: Optional[np.ndarray] = None
    rates_timeline = [rates]
    rates_log: list = []
    solver_log: list = []
    ex12_series: Optional[list] = [] if k == 2 else None
    a_over_t: Optional[list] = [] if k == 2 else None
    a_count = 0

    exo_matrix = (
        np.array(config.rates.mrs_matrix) if config.rates.mrs_matrix is not None else None
    )

    def exogenous_mrs(t):
        if exo_matrix is not None:
            return exo_matrix
        m = config.rates.mrs12.at(t)
        return np.array([[1.0, m], [1.0 / m, 1.0]])

    join_schedule = {t: tuple(entries) for t, entries in config.joins.items()}
    snapshot_interval = config.snapshot_interval
    strategy = regime.strategy if isinstance(regime, JointEgalitarian) else None
    is_random = isinstance(strategy, UniformRandom)
    is_myopic = isinstance(strategy, Myopic)
    is_defensive = isinstance(strategy, Defensive)
    is_egocentric = isinstance(strategy, Egocentric)
    is_fixed = isinstance(strategy, FixedCurrency)
    no_joins = frozenset()

    single_regime = isinstance(regime, EgalitarianSingle)
    if single_regime:
        si = regime.community

        def single_mint_keys():
            # (agent, balance/minted key, holdings bucket) per member,
            # rebuilt only when the membership changes
            return [
                (agent, (agent, si), holdings[(agent, si)])
                for agent in member_tuple[si]
            ]

        single_keys = single_mint_keys()

    for t in range(1, config.steps + 1):
        in_force = rates
        joins_t = []
        if t in join_schedule:
            for agent, cur in join_schedule[t]:
                members[cur].add(agent)
                members_frozen[cur] = frozenset(members[cur])
                member_tuple[cur] = tuple(sorted(members[cur]))
                if (agent, cur) not in balance:
                    balance[(agent, cur)] = 0
                    holdings[(agent, cur)] = {}
                joins_t.append((agent, cur))
            agents = sorted({a for who in members.values() for a in who})
            memberships = {a: membership_of(a) for a in agents}
            membership_epoch += 1
            if single_regime:
                single_keys = single_mint_keys()

        start_len = {i: len(coins_by[i]) for i in currencies}
        minted: dict = {}
        moved_old: dict = {}
        settled = False

        def move(coin, payer, payee):
            i = coin[0]
            if coin[1] < start_len[i] and coin not in moved_old:
                moved_old[coin] = payer
            holder[coin] = payee
            balance[(payer, i)] -= 1
            balance[(payee, i)] += 1
            del holdings[(payer, i)][coin]
            holdings[(payee, i)][coin] = None

        # -- minting (inlined: this is the hot path) -----------------------
        if single_regime:
            coins_i = coins_by[si]
            serial = count[si]
            for agent, key, bucket in single_keys:
                coin = (si, serial)
                serial += 1
                coins_i.append(coin)
                holder[coin] = agent
                bucket[coin] = None
                balance[key] += 1
                minted[key] = 1
            count[si] = serial
        elif isinstance(regime, EqualBirthGrant):
            for agent, i in sorted(joins_t):
                for _ in range(regime.coins):
                    mint_coin(agent, i)
                minted[(agent, i)] = regime.coins
        else:
            for agent in agents:
                mine = memberships[agent]
                if len(mine) == 1 and not is_fixed:
                    choice = mine[0]
                elif is_myopic:
                    choice = most_valued_coin(in_force, mine)
                elif is_defensive:
                    choice = min(mine, key=lambda i: (balance[(agent, i)], i))
                elif is_random:
                    choice = mine[rng.randrange(len(mine))]
                elif is_egocentric:
                    weights = weights_at(t)[agent]
                    diluted = [
                        balance.get((agent, i), 0) / count[i] if count[i] else 0.0
                        for i in currencies
                    ]
                    choice = choose_mint_currency(
                        strategy,
                        agent,
                        mine,
                        weights=weights,
                        diluted=diluted,
                        coin_counts=[count[i] for i in currencies],
                    )
                else:
                    choice = choose_mint_currency(
                        strategy, agent, mine, rates=in_force, rng=rng
                    )
                coin = (choice, count[choice])
                count[choice] += 1
                coins_by[choice].append(coin)
                holder[coin] = agent
                holdings[(agent, choice)][coin] = None
                balance[(agent, choice)] += 1
                key = (agent, choice)
                minted[key] = minted.get(key, 0) + 1

        if config.join_grant and not isinstance(regime, EqualBirthGrant):
            for agent, i in sorted(joins_t):
                for _ in range(config.join_grant):
                    mint_coin(agent, i)
                key = (agent, i)
                minted[key] = minted.get(key, 0) + config.join_grant

        # -- random trade noise (old coins only) ---------------------------
        if config.trade_noise:
            candidates = [i for i in currencies if start_len[i] > 0]
            if candidates:
                rnd = rng.random
                n_candidates = len(candidates)
                for _ in range(config.trade_noise):
                    i = candidates[0] if n_candidates == 1 else candidates[
                        int(rnd() * n_candidates)
                    ]
                    coin = coins_by[i][int(rnd() * start_len[i])]
                    payer = holder[coin]
                    group = member_tuple[i]
                    payee = group[int(rnd() * len(group))]
                    if payer != payee:
                        move(coin, payer, payee)

        # -- equilibration --------------------------------------------------
        if k >= 2 and t % config.k_eq == 0 and all(count[i] > 0 for i in currencies):
            counts_now = [count[i] for i in currencies]
            if endogenous:
                endowment = np.array(
                    [
                        [balance.get((a, i), 0) / count[i] for i in currencies]
                        for a in agents
                    ]
                )
                weight_rows = weights_at(t)
                weight_matrix = np.array([weight_rows[a] for a in agents])
                try:
                    solution = solve_equilibrium(
                        endowment,
                        weight_matrix,
                        tol=config.rates.tol,
                        max_iter=config.rates.max_iter,
                        start=prices_warm,
                    )
                except CurrencyNetError as exc:
                    raise type(exc)(f"step {t}: {exc}") from None
                prices_warm = solution.prices
                mrs = mrs_matrix(solution.prices)
                solver_log.append(
                    SolverEvent(
                        t,
                        solution.iterations,
                        solution.residual,
                        tuple(float(p) for p in solution.prices),
                    )
                )
            else:
                mrs = exogenous_mrs(t)
            rates = coin_exchange_rates(mrs, counts_now)
            rates_log.append(
                RatesEvent(
                    t,
                    tuple(tuple(float(x) for x in row) for row in mrs),
                    tuple(tuple(float(x) for x in row) for row in rates.ex),
                    prices=tuple(float(p) for p in solution.prices) if endogenous else None,
                )
            )
            if config.settlement and endogenous:
                settled = True
                for col, i in enumerate(currencies):
                    targets = largest_remainder_targets(
                        solution.allocation[:, col], count[i]
                    )
                    surplus = []
                    deficit = []
                    for row, agent in enumerate(agents):
                        have = balance.get((agent, i), 0)
                        want = targets[row]
                        if have > want:
                            surplus.append([agent, have - want])
                        elif want > have:
                            deficit.append([agent, want - have])
                    donor_idx = 0
                    for recipient, need in deficit:
                        while need:
                            donor, excess = surplus[donor_idx]
                            coin = next(reversed(holdings[(donor, i)]))
                            move(coin, donor, recipient)
                            need -= 1
                            excess -= 1
                            if excess:
                                surplus[donor_idx][1] = excess
                            else:
                                donor_idx += 1

        # -- record -----------------------------------------------------
        if settled:
            # settlement may move fresh coins: income follows the holder
            income = {}
            for i in currencies:
                for coin in coins_by[i][start_len[i]:]:
                    key = (holder[coin], i)
                    income[key] = income.get(key, 0) + 1
        else:
            # noise trades touch only pre-step coins, so every fresh coin
            # still sits with its minter
            income = minted
        revenue: dict = {}
        expenses: dict = {}
        for coin, origin in moved_old.items():
            final = holder[coin]
            if final != origin:
                i = coin[0]
                key_out = (origin, i)
                key_in = (final, i)
                expenses[key_out] = expenses.get(key_out, 0) + 1
                revenue[key_in] = revenue.get(key_in, 0) + 1

        retain = (snapshot_interval > 0 and t % snapshot_interval == 0) or (
            t == config.steps and config.final_snapshot
        )
        history.append_step(
            HistoryStep(
                t=t,
                minted=minted,
                joins=frozenset(joins_t) if joins_t else no_joins,
                members=dict(members_frozen),
                coin_counts=dict(count),
                balances=dict(balance),
                income=income,
                revenue=revenue,
                expenses=expenses,
                network=materialize() if retain else None,
            )
        )
        rates_timeline.append(in_force)
        if k == 2:
            ex12 = in_force.rate(1, 2)
            ex12_series.append(ex12)
            if ex12 >= 1.0:
                a_count += 1
            a_over_t.append(a_count / t)

    return RunResult(
        config=config,
        history=history,
        diagnostics=diagnostics,
        rates_timeline=rates_timeline,
        rates_log=rates_log,
        solver_log=solver_log,
        ex12=ex12_series,
        a_over_t=a_over_t,
        final_network=history.steps[-1].network,
    )
