"""Reward-generating environments.

Machines are indexed from 0 internally; :func:`machine_label` maps an index
to the letter used in tables and reports (0 -> "A").

Every environment used by the episode engine exposes the same small surface:

* ``n_machines``
* ``reward_probs(selections)`` - per-player success probability for a joint
  selection, broadcasting over leading axes.
* ``noise_width(n_players, policy)`` and
  ``rewards_from_uniforms(selections, u, policy)`` - turn pre-drawn uniforms
  into rewards, so a whole episode's randomness can be drawn up front.
* ``draw_round(selections, rng, policy, t)`` - one round with a live stream.
"""

from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy import stats

from .errors import DataIntegrityError, InputError

__all__ = [
    "CollisionPolicy",
    "MachineSet",
    "GeneralRewardModel",
    "RewardTape",
    "EpdTable",
    "EpdEnvironment",
    "CANONICAL_PROBS",
    "EPD_LEVELS",
    "STATED_DEGREE_EXAMPLES",
    "machine_label",
    "parse_pattern",
    "expected_payoff",
    "draw_round",
    "epd_payoff",
    "epd_degrees_oracle",
    "epd_level_rule",
    "load_epd_table",
    "epd_discrepancies",
    "all_patterns",
    "social_optima",
    "nash_pattern",
]

CANONICAL_PROBS = (0.03, 0.05, 0.1, 0.2, 0.9)

EPD_LEVELS = {
    "T3": 0.79,
    "T2": 0.76,
    "T1": 0.73,
    "R": 0.70,
    "R1": 0.60,
    "R2": 0.55,
    "P": 0.50,
    "S1": 0.40,
    "S2": 0.30,
    "S3": 0.20,
}

# Worked examples of the degree-of-charges rule as written out in the game's
# description. Several disagree with the complete table (and with the
# choice-semantics oracle); epd_discrepancies() lists them.
STATED_DEGREE_EXAMPLES = {
    ("B", "B", "B"): (1, 1, 1),
    ("A", "B", "C"): (1, 1, 0),
    ("B", "C", "D"): (2, 1, 1),
    ("C", "D", "D"): (2, 2, 1),
    ("D", "D", "D"): (2, 2, 2),
    ("B", "D", "D"): (3, 1, 1),
}

_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def machine_label(k: int) -> str:
    return _LETTERS[k] if k < len(_LETTERS) else str(k + 1)


def parse_pattern(pattern, n_machines: int) -> np.ndarray:
    """Convert a sequence of letters or 0-based indices to an index array."""
    out = []
    for c in pattern:
        if isinstance(c, str):
            c = c.strip().upper()
            if len(c) != 1 or c not in _LETTERS:
                raise InputError(f"unknown machine label {c!r}")
            c = _LETTERS.index(c)
        c = int(c)
        if not 0 <= c < n_machines:
            raise InputError(f"machine index {c} outside [0, {n_machines})")
        out.append(c)
    return np.asarray(out, dtype=np.intp)


class CollisionPolicy(str, enum.Enum):
    """How a contested machine's reward is shared.

    ``SPLIT_PROBABILITY``: each of ``c`` contenders independently wins a whole
    coin with probability ``P/c``. ``SPLIT_VALUE``: the machine pays one
    Bernoulli(``P``) coin and each contender receives ``1/c`` of it.
    """

    SPLIT_PROBABILITY = "split-prob"
    SPLIT_VALUE = "split-value"


def _contention(selections: np.ndarray, n_machines: int) -> np.ndarray:
    """Number of players sharing each player's machine, shape of ``selections``."""
    onehot = selections[..., :, None] == np.arange(n_machines)
    counts = onehot.sum(axis=-2)
    return np.take_along_axis(counts, selections, axis=-1)


@dataclass(frozen=True)
class MachineSet:
    """Bernoulli slot machines with reward probabilities ``probs``."""

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if len(probs) < 2:
            raise InputError("a machine set needs at least two machines")
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise InputError(f"reward probabilities must lie in [0, 1]: {probs}")
        object.__setattr__(self, "probs", probs)

    @property
    def n_machines(self) -> int:
        return len(self.probs)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.probs)

    def _check(self, selections) -> np.ndarray:
        sel = np.asarray(selections)
        if sel.dtype.kind not in "iu":
            raise InputError("selections must be integer machine indices")
        if sel.size and (sel.min() < 0 or sel.max() >= self.n_machines):
            raise InputError(f"machine index outside [0, {self.n_machines})")
        return sel

    def reward_probs(self, selections) -> np.ndarray:
        sel = self._check(selections)
        return self.p[sel] / _contention(sel, self.n_machines)

    def expected_payoff(self, pattern) -> np.ndarray:
        sel = parse_pattern(pattern, self.n_machines)
        return self.reward_probs(sel)

    def noise_width(self, n_players: int, policy=CollisionPolicy.SPLIT_PROBABILITY) -> int:
        return n_players if CollisionPolicy(policy) is CollisionPolicy.SPLIT_PROBABILITY else self.n_machines

    def rewards_from_uniforms(self, selections, u, policy=CollisionPolicy.SPLIT_PROBABILITY) -> np.ndarray:
        sel = self._check(selections)
        c = _contention(sel, self.n_machines)
        if CollisionPolicy(policy) is CollisionPolicy.SPLIT_PROBABILITY:
            return (u < self.p[sel] / c).astype(float)
        paid = u < self.p  # one outcome per machine
        return np.take_along_axis(paid, sel, axis=-1) / c

    def draw_round(self, selections, rng, policy=CollisionPolicy.SPLIT_PROBABILITY, t=None) -> np.ndarray:
        sel = self._check(selections)
        u = rng.random(sel.shape[:-1] + (self.noise_width(sel.shape[-1], policy),))
        return self.rewards_from_uniforms(sel, u, policy)

    def top(self, m: int) -> np.ndarray:
        """Indices of the ``m`` best machines, best first."""
        return np.argsort(-self.p, kind="stable")[:m]

    def social_value(self, n_players: int) -> float:
        """Largest achievable total expected reward per round."""
        return float(np.sort(self.p)[::-1][:n_players].sum())


def expected_payoff(machines: MachineSet, pattern) -> np.ndarray:
    """Expected reward of each player: ``P_k / c_k`` for its machine ``k``."""
    return machines.expected_payoff(pattern)


def draw_round(machines, selections, policy=CollisionPolicy.SPLIT_PROBABILITY, rng=None) -> np.ndarray:
    if rng is None:
        raise InputError("draw_round needs an initialised random generator")
    return machines.draw_round(selections, rng, policy)


@dataclass(frozen=True)
class GeneralRewardModel:
    """Machines paying real rewards on ``[0, R]`` with given means and variances.

    ``kind="uniform"`` draws from the interval of width ``sqrt(12 var)``
    centred on the mean, which must fit inside ``[0, R]``. ``kind="gaussian"``
    draws from a normal truncated to ``[0, R]`` (its mean shifts slightly when
    the truncation bites).
    """

    means: tuple[float, ...]
    variances: tuple[float, ...]
    upper: float = 1.0
    kind: str = "uniform"

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        variances = tuple(float(v) for v in self.variances)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        if len(means) < 2 or len(means) != len(variances):
            raise InputError("need matching means and variances for at least two machines")
        if self.upper <= 0:
            raise InputError("reward upper bound must be positive")
        if any(not 0.0 <= m <= self.upper for m in means):
            raise InputError("means must lie in [0, R]")
        if any(v < 0 for v in variances):
            raise InputError("variances must be non-negative")
        if self.kind not in ("uniform", "gaussian"):
            raise InputError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "uniform":
            for m, v in zip(means, variances):
                half = np.sqrt(3.0 * v)
                if m - half < -1e-12 or m + half > self.upper + 1e-12:
                    raise InputError(f"uniform with mean {m}, variance {v} does not fit in [0, {self.upper}]")

    @property
    def n_machines(self) -> int:
        return len(self.means)

    def sample(self, k: int, rng, size=None) -> np.ndarray | float:
        m, v = self.means[k], self.variances[k]
        if v == 0:
            return np.full(size, m) if size is not None else m
        sd = np.sqrt(v)
        if self.kind == "uniform":
            half = np.sqrt(3.0) * sd
            r = rng.uniform(max(m - half, 0.0), min(m + half, self.upper), size=size)
        else:
            a, b = (0.0 - m) / sd, (self.upper - m) / sd
            r = stats.truncnorm.rvs(a, b, loc=m, scale=sd, size=size, random_state=rng)
        return np.clip(r, 0.0, self.upper)


@dataclass(frozen=True)
class RewardTape:
    """Pre-recorded rewards ``tape[t, player, machine]``.

    Whatever a player selects at step ``t``, it receives the recorded value,
    independent of other players. Useful for replaying one reward sequence
    through two different decision rules.
    """

    tape: np.ndarray = field(repr=False)

    def __post_init__(self):
        tape = np.asarray(self.tape, dtype=float)
        if tape.ndim != 3:
            raise InputError("tape must have shape (steps, players, machines)")
        object.__setattr__(self, "tape", tape)

    @property
    def n_machines(self) -> int:
        return self.tape.shape[2]

    def draw_round(self, selections, rng=None, policy=None, t=0) -> np.ndarray:
        sel = np.asarray(selections)
        return self.tape[t, np.arange(sel.shape[-1]), sel]


@dataclass(frozen=True)
class EpdTable:
    """Extended Prisoner's Dilemma: three prisoners, five options A..E.

    Rows are stored in base-5 order of the selection pattern, so
    ``degrees[code]`` and ``probs[code]`` with
    ``code = 25*c1 + 5*c2 + c3`` give the row for pattern ``(c1, c2, c3)``.
    """

    degrees: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)

    N_PLAYERS = 3
    N_OPTIONS = 5

    def __post_init__(self):
        degrees = np.asarray(self.degrees, dtype=int)
        probs = np.asarray(self.probs, dtype=float)
        if degrees.shape != (125, 3) or probs.shape != (125, 3):
            raise DataIntegrityError("the EPD table must have exactly 125 rows of three players")
        allowed = np.array(sorted(EPD_LEVELS.values()))
        if not np.all(np.isclose(probs[..., None], allowed).any(axis=-1)):
            raise DataIntegrityError("EPD probability outside the named levels")
        if degrees.min() < 0 or degrees.max() > 3:
            raise DataIntegrityError("degrees of charges must lie in 0..3")
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "probs", probs)

    @staticmethod
    def code(pattern) -> int:
        c = parse_pattern(pattern, EpdTable.N_OPTIONS)
        if c.shape != (3,):
            raise InputError("an EPD pattern has exactly three choices")
        return int(c[0] * 25 + c[1] * 5 + c[2])

    @staticmethod
    def patterns() -> list[tuple[str, str, str]]:
        return list(itertools.product("ABCDE", repeat=3))

    def __len__(self) -> int:
        return len(self.degrees)

    def row(self, pattern) -> tuple[tuple[int, ...], tuple[float, ...]]:
        i = self.code(pattern)
        return tuple(int(d) for d in self.degrees[i]), tuple(float(p) for p in self.probs[i])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            for i, pat in enumerate(self.patterns()):
                w.writerow([*pat, *self.degrees[i], *(f"{p:.2f}" for p in self.probs[i])])


def load_epd_table(path=None) -> EpdTable:
    """Read the EPD table (bundled copy by default).

    Format: one row per pattern, ``c1,c2,c3,d1,d2,d3,p1,p2,p3``.
    """
    if path is None:
        text = resources.files("towbombe.data").joinpath("epd_table.csv").read_text()
    else:
        with open(path) as f:
            text = f.read()
    degrees = np.full((125, 3), -1)
    probs = np.full((125, 3), np.nan)
    seen = set()
    for lineno, rec in enumerate(csv.reader(text.splitlines()), 1):
        if not rec or rec[0].startswith("#"):
            continue
        if len(rec) != 9:
            raise DataIntegrityError(f"EPD row {lineno}: expected 9 fields, got {len(rec)}")
        try:
            i = EpdTable.code(rec[:3])
            d = [int(x) for x in rec[3:6]]
            p = [float(x) for x in rec[6:9]]
        except (InputError, ValueError) as exc:
            raise DataIntegrityError(f"EPD row {lineno}: {exc}") from exc
        if i in seen:
            raise DataIntegrityError(f"EPD row {lineno}: duplicate pattern {tuple(rec[:3])}")
        seen.add(i)
        degrees[i], probs[i] = d, p
    if len(seen) != 125:
        missing = [p for p in EpdTable.patterns() if EpdTable.code(p) not in seen]
        raise DataIntegrityError(f"EPD table incomplete: {len(missing)} patterns missing, e.g. {missing[:3]}")
    return EpdTable(degrees, probs)


def epd_payoff(table: EpdTable, pattern):
    """Stored ``(degrees, probs)`` row for a selection pattern."""
    return table.row(pattern)


def epd_degrees_oracle(pattern) -> tuple[int, int, int]:
    """Degrees of charges computed from what each option means.

    A: nothing; B: implicates oneself; C: the next prisoner (1->2->3->1);
    D: the prisoner after next; E: both others.
    """
    c = parse_pattern(pattern, 5)
    deg = [0, 0, 0]
    for i, choice in enumerate(c):
        if choice == 1:
            deg[i] += 1
        if choice in (2, 4):
            deg[(i + 1) % 3] += 1
        if choice in (3, 4):
            deg[(i + 2) % 3] += 1
    return tuple(deg)


def epd_level_rule(degrees) -> tuple[float, float, float]:
    """Reward levels implied by the written tier rule for a degree pattern.

    Anchor patterns get R2/R1/R/P. Otherwise a prisoner at the minimum degree
    gets ``T<spread>`` and anyone above it gets ``S<own excess>``.
    """
    d = tuple(int(x) for x in degrees)
    if d == (0, 0, 0):
        return (EPD_LEVELS["R2"],) * 3
    if d == (1, 1, 1):
        return (EPD_LEVELS["R1"],) * 3
    if sorted(d) == [1, 1, 2]:
        return (EPD_LEVELS["R"],) * 3
    if d == (2, 2, 2):
        return (EPD_LEVELS["P"],) * 3
    lo, spread = min(d), max(d) - min(d)
    return tuple(EPD_LEVELS[f"T{spread}"] if x == lo else EPD_LEVELS[f"S{x - lo}"] for x in d)


def epd_discrepancies(table: EpdTable) -> dict[str, list]:
    """Compare the table against independent derivations.

    Returns three lists of ``(pattern, table_value, derived_value)``:
    ``oracle_degrees`` (choice semantics), ``stated_examples`` (the worked
    examples in :data:`STATED_DEGREE_EXAMPLES`) and ``level_rule`` (the tier
    rule applied to the table's own degrees).
    """
    report = {"oracle_degrees": [], "stated_examples": [], "level_rule": []}
    for pat in table.patterns():
        deg, probs = table.row(pat)
        oracle = epd_degrees_oracle(pat)
        if oracle != deg:
            report["oracle_degrees"].append((pat, deg, oracle))
        rule = epd_level_rule(deg)
        if not np.allclose(rule, probs):
            report["level_rule"].append((pat, probs, rule))
    for pat, stated in STATED_DEGREE_EXAMPLES.items():
        deg, _ = table.row(pat)
        if deg != stated:
            report["stated_examples"].append((pat, deg, stated))
    return report


class EpdEnvironment:
    """The EPD game as a bandit environment: 3 players, 5 options, no splitting."""

    n_players = 3
    n_machines = 5

    def __init__(self, table: EpdTable | None = None):
        self.table = table if table is not None else load_epd_table()

    def _codes(self, selections) -> np.ndarray:
        sel = np.asarray(selections)
        if sel.shape[-1] != 3:
            raise InputError("the EPD game has exactly three players")
        if sel.size and (sel.min() < 0 or sel.max() > 4):
            raise InputError("EPD options are indices 0..4")
        return sel[..., 0] * 25 + sel[..., 1] * 5 + sel[..., 2]

    def reward_probs(self, selections) -> np.ndarray:
        return self.table.probs[self._codes(selections)]

    def expected_payoff(self, pattern) -> np.ndarray:
        return self.reward_probs(parse_pattern(pattern, 5))

    def noise_width(self, n_players: int, policy=None) -> int:
        return n_players

    def rewards_from_uniforms(self, selections, u, policy=None) -> np.ndarray:
        return (u < self.reward_probs(selections)).astype(float)

    def draw_round(self, selections, rng, policy=None, t=None) -> np.ndarray:
        sel = np.asarray(selections)
        return self.rewards_from_uniforms(sel, rng.random(sel.shape), policy)

    def social_value(self, n_players: int = 3) -> float:
        return float(self.table.probs.sum(axis=1).max())


def all_patterns(n_players: int, n_machines: int) -> np.ndarray:
    return np.array(list(itertools.product(range(n_machines), repeat=n_players)), dtype=np.intp)


def social_optima(env, n_players: int) -> np.ndarray:
    """Every joint selection attaining the largest total expected reward."""
    pats = all_patterns(n_players, env.n_machines)
    totals = env.reward_probs(pats).sum(axis=1)
    return pats[np.isclose(totals, totals.max(), rtol=0, atol=1e-12)]


def nash_pattern(env, n_players: int) -> np.ndarray:
    """The selfish fixed point the bombe is meant to avoid.

    For machine sets: every player on the single best machine. For the EPD
    game: everyone implicating both others (E, E, E).
    """
    if isinstance(env, EpdEnvironment):
        return np.array([4, 4, 4], dtype=np.intp)
    return np.full(n_players, int(np.argmax(env.p)), dtype=np.intp)
