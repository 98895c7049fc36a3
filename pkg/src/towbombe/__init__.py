"""Tug-of-war (TOW) bandit dynamics and the multi-player TOW bombe.

Submodules: ``environment`` (reward models and payoff tables), ``tow``
(single-player dynamics), ``fluctuations``, ``bombe`` (the coupled device),
``metrics``, ``baselines``, ``harness`` (seeded experiments and CSV output),
``verify`` and ``cli``.
"""

from .baselines import make_strategy
from .bombe import Dynamics, run_episode, simulate
from .environment import (CANONICAL_PROBS, CollisionPolicy, EpdEnvironment, EpdTable, GeneralRewardModel,
                          MachineSet, RewardTape, load_epd_table)
from .errors import ConfigError, DataIntegrityError, DomainError, InputError
from .fluctuations import FluctuationKind, FluctuationSpec
from .harness import BpConfig, ExperimentConfig, SweepSpec, rng_stream, run_bp, run_experiment, run_sweep
from .metrics import RunRecord, Summary, aggregate, classify_outcome, fairness
from .tow import TowState, gamma_prime, omega0, simulate_tow, tow_select, tow_update

__version__ = "0.1.0"
