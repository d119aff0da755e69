"""
市场仿真、最优动作标注与报价文件测试
"""

from itertools import product

import numpy as np
import pytest

from core.errors import ConfigurationError, DataError, ParseError
from simulators.market import (
    Action,
    SimParams,
    Tick,
    TickSeries,
    action_accuracy,
    brute_force_best,
    market_prices,
    mktpx,
    optimal_actions,
    profit_per_step,
    simulate_pnl,
    synth_quotes,
    uniform_strategy,
)
from simulators.store import load_labeled_ticks, load_ticks, save_ticks

COST = SimParams(max_position=3, cost_per_trade=0.02)


def flat_series(prices, sizes=1.0):
    prices = np.asarray(prices, dtype=np.float64)
    ones = np.full(prices.size, sizes)
    return TickSeries(prices, ones, prices, ones)


def random_series(rng, length, spread_max=0.2):
    mid = 100 + np.cumsum(rng.normal(0, 0.05, size=length))
    spread = rng.uniform(0, spread_max, size=length)
    return TickSeries(mid - spread / 2, rng.uniform(1, 10, size=length),
                      mid + spread / 2, rng.uniform(1, 10, size=length))


class TestMarketPrice:

    def test_size_weighted(self):
        assert mktpx(Tick(10.0, 1.0, 12.0, 3.0)) == pytest.approx(10.5)

    def test_zero_sizes_midpoint(self):
        assert mktpx(Tick(10.0, 0.0, 12.0, 0.0)) == 11.0

    def test_equal_sizes_midpoint(self):
        assert mktpx(Tick(10.0, 4.0, 12.0, 4.0)) == 11.0

    def test_series_matches_single_tick(self, rng):
        ticks = random_series(rng, 50)
        ticks.bidsz[7] = ticks.asksz[7] = 0.0
        prices = market_prices(ticks)
        assert [mktpx(ticks.tick(t)) for t in range(len(ticks))] == list(prices)


class TestSimulatePnl:

    def test_do_nothing(self, rng):
        ticks = random_series(rng, 30)
        assert simulate_pnl(ticks, [Action.DO_NOTHING] * 30, COST) == 0.0

    def test_buy_at_bid_hand_trace(self):
        ticks = flat_series([10.0, 12.0])
        pnl = simulate_pnl(ticks, [Action.BUY_AT_BID, Action.DO_NOTHING], COST)
        assert pnl == pytest.approx(1.98, abs=1e-12)

    def test_buy_at_ask_position_cap(self):
        ticks = flat_series([10.0] * 8)
        pnl = simulate_pnl(ticks, [Action.BUY_AT_ASK] * 8, COST)
        assert pnl == pytest.approx(-0.06, abs=1e-12)

    def test_sell_branches(self):
        ticks = TickSeries([10.0, 11.0, 11.0], [1, 1, 1], [10.5, 11.5, 11.5], [1, 1, 1])
        # mkt: 10.25 → 11.25；卖在ask 10.5 后持仓−1，下一步再盯市
        pnl = simulate_pnl(ticks, [Action.SELL_AT_ASK, Action.DO_NOTHING, Action.DO_NOTHING],
                           SimParams(cost_per_trade=0.0))
        assert pnl == pytest.approx(10.5 - 11.25, abs=1e-12)

    def test_last_action_ignored(self, rng):
        ticks = random_series(rng, 5)
        base = [Action.BUY_AT_BID, Action.DO_NOTHING, Action.SELL_AT_ASK, Action.DO_NOTHING]
        assert simulate_pnl(ticks, base + [Action.BUY_AT_ASK], COST) == \
            simulate_pnl(ticks, base + [Action.SELL_AT_BID], COST)

    def test_single_tick(self):
        assert simulate_pnl(flat_series([10.0]), [Action.BUY_AT_BID], COST) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ConfigurationError):
            simulate_pnl(flat_series([1.0, 2.0]), [Action.DO_NOTHING], COST)

    def test_zero_cost_zero_spread_constant_prices(self, rng):
        ticks = flat_series([50.0] * 12)
        actions = rng.integers(0, 5, size=12)
        assert simulate_pnl(ticks, actions, SimParams(cost_per_trade=0.0)) == 0.0


class TestOptimalActions:

    def test_constant_prices_do_nothing(self):
        actions, pnl = optimal_actions(flat_series([10.0] * 10), COST)
        assert np.all(actions == Action.DO_NOTHING)
        assert pnl == 0.0

    def test_rising_prices_buy_immediately(self):
        ticks = flat_series([10.0, 11.0, 12.0, 13.0, 14.0, 15.0])
        params = SimParams(max_position=2, cost_per_trade=0.0)
        actions, pnl = optimal_actions(ticks, params)
        assert pnl == brute_force_best(ticks, params)
        assert list(actions[:2]) == [Action.BUY_AT_BID, Action.BUY_AT_BID]
        assert actions[-1] == Action.DO_NOTHING

    def test_matches_brute_force(self):
        rng = np.random.default_rng(123)
        for _ in range(100):
            ticks = random_series(rng, 6)
            _, pnl = optimal_actions(ticks, COST)
            assert abs(pnl - brute_force_best(ticks, COST)) <= 1e-9

    def test_replay_consistent(self, rng):
        ticks = synth_quotes(10_000, seed=4)
        actions, pnl = optimal_actions(ticks, COST)
        assert simulate_pnl(ticks, actions, COST) == pytest.approx(pnl, abs=1e-9)
        assert actions[-1] == Action.DO_NOTHING

    def test_dominates_random_strategies(self, rng):
        ticks = random_series(rng, 40)
        _, best = optimal_actions(ticks, COST)
        for seed in range(50):
            assert simulate_pnl(ticks, uniform_strategy(40, seed), COST) <= best + 1e-12

    def test_bound_nonincreasing_in_cost(self):
        ticks = synth_quotes(2000, seed=8)
        _, cheap = optimal_actions(ticks, SimParams(cost_per_trade=0.02))
        _, expensive = optimal_actions(ticks, SimParams(cost_per_trade=1.0))
        assert expensive <= cheap

    def test_position_stays_bounded(self, rng):
        ticks = random_series(rng, 30)
        actions, _ = optimal_actions(ticks, COST)
        position = 0
        for a in actions[:-1]:
            if a in (Action.BUY_AT_BID, Action.BUY_AT_ASK) and position < 3:
                position += 1
            elif a in (Action.SELL_AT_BID, Action.SELL_AT_ASK) and position > -3:
                position -= 1
            assert abs(position) <= 3

    def test_brute_force_limit(self):
        with pytest.raises(ConfigurationError):
            brute_force_best(flat_series([1.0] * 9), COST)


class TestUniformStrategy:

    def test_class_frequencies(self):
        actions = uniform_strategy(10_000, seed=0)
        freq = np.bincount(actions, minlength=5) / actions.size
        np.testing.assert_allclose(freq, 0.2, atol=0.02)

    def test_accuracy_against_labels(self):
        ticks = synth_quotes(10_000, seed=2)
        labels, _ = optimal_actions(ticks, COST)
        assert action_accuracy(uniform_strategy(10_000, seed=1), labels) == pytest.approx(0.2, abs=0.02)

    def test_loses_money_with_costs(self):
        profits = [profit_per_step(simulate_pnl(synth_quotes(2000, seed=s, spread=0.0),
                                                uniform_strategy(2000, s), COST), 2000)
                   for s in range(10)]
        assert np.mean(profits) < 0

    def test_profit_per_step(self):
        assert profit_per_step(3.0, 4) == 1.0
        assert profit_per_step(3.0, 1) == 3.0


class TestSynthQuotes:

    def test_zero_vol_constant(self):
        ticks = synth_quotes(50, seed=1, vol=0.0)
        assert np.all(ticks.bidpx == ticks.bidpx[0])
        assert np.all(ticks.askpx == ticks.askpx[0])

    def test_spread(self):
        ticks = synth_quotes(100, seed=1, spread=0.25)
        np.testing.assert_allclose(ticks.askpx - ticks.bidpx, 0.25)

    def test_sizes_in_range(self):
        ticks = synth_quotes(500, seed=3)
        assert ticks.bidsz.min() >= 1 and ticks.asksz.max() <= 10

    def test_custom_size_range(self):
        ticks = synth_quotes(500, seed=3, min_size=2.0, max_size=4.0)
        sizes = np.concatenate([ticks.bidsz, ticks.asksz])
        assert sizes.min() >= 2.0 and sizes.max() <= 4.0

    def test_rejects_inverted_size_range(self):
        with pytest.raises(ConfigurationError):
            synth_quotes(10, seed=3, min_size=5.0, max_size=1.0)

    def test_deterministic(self):
        a, b = synth_quotes(30, seed=5), synth_quotes(30, seed=5)
        np.testing.assert_array_equal(a.features(), b.features())


class TestTickFiles:

    def test_round_trip(self, tmp_path):
        ticks = synth_quotes(40, seed=6)
        loaded = load_ticks(save_ticks(tmp_path / "t.csv", ticks))
        np.testing.assert_array_equal(loaded.features(), ticks.features())
        assert loaded.n_indicators == 0

    def test_indicator_columns(self, tmp_path):
        ticks = synth_quotes(10, seed=6)
        ticks = TickSeries(ticks.bidpx, ticks.bidsz, ticks.askpx, ticks.asksz, np.arange(20.0).reshape(10, 2))
        loaded = load_ticks(save_ticks(tmp_path / "t.csv", ticks))
        assert loaded.n_indicators == 2
        assert loaded.features().shape == (6, 10)

    def test_labeled_round_trip(self, tmp_path):
        ticks = synth_quotes(20, seed=7)
        actions, _ = optimal_actions(ticks, COST)
        loaded, labels = load_labeled_ticks(save_ticks(tmp_path / "l.csv", ticks, actions))
        np.testing.assert_array_equal(labels, actions)
        assert loaded.n_indicators == 0

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("bid,bidsz,askpx,asksz\n1,1,1,1\n", encoding="utf-8")
        with pytest.raises(ParseError):
            load_ticks(path)

    def test_malformed_row_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("bidpx,bidsz,askpx,asksz\n1,1,2,1\n1,x,2,1\n", encoding="utf-8")
        with pytest.raises(ParseError) as info:
            load_ticks(path)
        assert info.value.line_number == 3

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataError):
            load_ticks(path)
