#!/usr/bin/env python3
"""
仿真模块初始化：目标跟踪、市场报价与钢琴卷帘
"""

from .tracking import (
    TrackingParams,
    TrackingState,
    TrackingDataset,
    bounce,
    step_state,
    observe,
    simulate_trajectory,
    generate_dataset,
)
from .market import (
    Action,
    Tick,
    TickSeries,
    SimParams,
    SynthQuoteParams,
    mktpx,
    simulate_pnl,
    optimal_actions,
    brute_force_best,
    uniform_strategy,
    synth_quotes,
    profit_per_step,
    action_accuracy,
)
from .pianoroll import PianorollParams, synth_pianoroll, load_pianoroll, save_pianoroll, next_step_pairs
from .store import DataStore, save_tracking, load_tracking, save_ticks, load_ticks, load_labeled_ticks

__all__ = [
    'TrackingParams', 'TrackingState', 'TrackingDataset', 'bounce', 'step_state', 'observe',
    'simulate_trajectory', 'generate_dataset',
    'Action', 'Tick', 'TickSeries', 'SimParams', 'SynthQuoteParams', 'mktpx', 'simulate_pnl',
    'optimal_actions', 'brute_force_best', 'uniform_strategy', 'synth_quotes',
    'profit_per_step', 'action_accuracy',
    'PianorollParams', 'synth_pianoroll', 'load_pianoroll', 'save_pianoroll', 'next_step_pairs',
    'DataStore', 'save_tracking', 'load_tracking', 'save_ticks', 'load_ticks', 'load_labeled_ticks',
]
