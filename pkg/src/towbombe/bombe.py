"""The M-player x N-machine TOW bombe.

State is an ``(M, N)`` matrix ``Q``. One step:

1. heights ``X = Q - (row sum of the other machines) / (N - 1)``
2. each player picks the argmax of ``X + osc`` (ties broken uniformly)
3. the environment pays out
4. ``dQ`` is ``+1`` on the chosen cell when rewarded, ``-omega`` otherwise
5. ``Q += dQ - (sum of the other players' dQ in that column) / (M - 1)``

Fluctuations touch the heights only and are never folded into ``Q``, so with
``Q`` starting at zero every column of ``Q`` and every row of ``X`` keeps a
zero sum.

All primitives broadcast over leading axes; :func:`simulate` runs a batch of
independent episodes in lock step using randomness drawn up front by
:func:`draw_episode_noise`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .environment import CollisionPolicy, _contention
from .errors import DomainError, InputError
from .fluctuations import FluctuationSpec, fluctuation_series
from .metrics import RunRecord, classify_outcome
from .tow import adaptive_omega

__all__ = [
    "Dynamics",
    "BombeState",
    "StepOutcome",
    "EpisodeNoise",
    "EpisodeBatch",
    "compute_heights",
    "select_machines",
    "deltas_from_outcome",
    "apply_coupling",
    "bombe_step",
    "draw_episode_noise",
    "stack_noise",
    "simulate",
    "records_from_batch",
    "run_episode",
]


@dataclass(frozen=True)
class Dynamics:
    """Per-episode settings of the bombe.

    ``omega=None`` means adaptive weighting (each player estimates it from
    its own counts every step). ``collision_delta="share"`` credits a won
    coin on a contested machine as ``+1/c`` instead of ``+1``.
    """

    n_players: int = 3
    plays: int = 1000
    omega: float | None = 0.08
    policy: CollisionPolicy = CollisionPolicy.SPLIT_PROBABILITY
    coupling: bool = True
    collision_delta: str = "unit"
    prior: str = "laplace"
    window: int = 100

    def __post_init__(self):
        object.__setattr__(self, "policy", CollisionPolicy(self.policy))
        if self.plays < 1:
            raise InputError("plays must be at least 1")
        if self.n_players < 1:
            raise InputError("need at least one player")
        if self.omega is not None and self.omega < 0:
            raise InputError("omega must be non-negative")
        if self.collision_delta not in ("unit", "share"):
            raise InputError(f"unknown collision_delta {self.collision_delta!r}")
        if self.window < 1:
            raise InputError("classification window must be at least 1")


def compute_heights(q) -> np.ndarray:
    """Interface heights ``X_ik = Q_ik - sum_{l != k} Q_il / (N - 1)``."""
    q = np.asarray(q, dtype=float)
    n = q.shape[-1]
    if n < 2:
        raise DomainError("need at least two machines")
    row = q.sum(axis=-1, keepdims=True)
    return q - (row - q) / (n - 1)


def select_machines(x, osc=None, rng=None, tie_u=None) -> np.ndarray:
    """Per-player argmax of ``x + osc`` over the last axis.

    Ties go to the ``floor(u * n_ties)``-th tied machine in index order,
    with ``u`` from ``tie_u`` or drawn from ``rng`` (one per player).
    """
    y = np.asarray(x, dtype=float)
    if osc is not None:
        osc = np.asarray(osc, dtype=float)
        if osc.shape != y.shape:
            raise InputError(f"fluctuation shape {osc.shape} does not match heights {y.shape}")
        y = y + osc
    if tie_u is None:
        if rng is None:
            raise InputError("need rng or tie_u to break ties")
        tie_u = rng.random(y.shape[:-1])
    ties = y == y.max(axis=-1, keepdims=True)
    n_ties = ties.sum(axis=-1)
    pick = np.minimum((np.asarray(tie_u) * n_ties).astype(np.intp), n_ties - 1)
    rank = np.cumsum(ties, axis=-1) - 1
    return np.argmax(ties & (rank == pick[..., None]), axis=-1)


def deltas_from_outcome(selections, rewards, omega, n_machines: int, share: bool = False) -> np.ndarray:
    """``dQ``: ``+1`` (or ``+1/c`` with ``share``) where a player won,
    ``-omega_i`` where it lost, zero on unchosen machines."""
    sel = np.asarray(selections)
    rew = np.asarray(rewards, dtype=float)
    w = np.broadcast_to(np.asarray(omega, dtype=float), sel.shape)
    gain = 1.0 / _contention(sel, n_machines) if share else 1.0
    val = np.where(rew > 0, gain, -w)
    onehot = sel[..., None] == np.arange(n_machines)
    return np.where(onehot, val[..., None], 0.0)


def apply_coupling(q, dq) -> np.ndarray:
    """``Q_ik + dQ_ik - sum_{j != i} dQ_jk / (M - 1)``; preserves column sums."""
    q = np.asarray(q, dtype=float)
    dq = np.asarray(dq, dtype=float)
    m = q.shape[-2]
    if m < 2:
        raise DomainError("coupling needs at least two players; use single-player TOW instead")
    col = dq.sum(axis=-2, keepdims=True)
    return q + dq - (col - dq) / (m - 1)


@dataclass(frozen=True)
class BombeState:
    """Full device state. ``omega[i] is None`` marks an adaptive player."""

    q: np.ndarray
    plays: np.ndarray
    failures: np.ndarray
    wins: np.ndarray
    omega: tuple
    t: int = 0
    prior: str = "laplace"

    @classmethod
    def zero(cls, n_players: int, n_machines: int, omega=0.08, prior: str = "laplace"):
        if n_machines < 2:
            raise DomainError("need at least two machines")
        if omega is None or np.isscalar(omega):
            omega = (omega,) * n_players
        if len(omega) != n_players:
            raise InputError("one omega per player")
        z = np.zeros((n_players, n_machines), dtype=np.int64)
        return cls(np.zeros((n_players, n_machines)), z, z.copy(), z.copy(), tuple(omega), 0, prior)

    @property
    def n_players(self) -> int:
        return self.q.shape[0]

    @property
    def n_machines(self) -> int:
        return self.q.shape[1]

    def current_omega(self) -> np.ndarray:
        out = np.empty(self.n_players)
        for i, w in enumerate(self.omega):
            if w is None:
                out[i] = adaptive_omega(self.wins[i], self.plays[i], self.n_players, self.prior)
            else:
                out[i] = w
        return out


@dataclass(frozen=True)
class StepOutcome:
    selections: np.ndarray
    rewards: np.ndarray
    collisions: np.ndarray  # players per machine


def bombe_step(state: BombeState, env, osc, rng, policy=CollisionPolicy.SPLIT_PROBABILITY,
               coupling: bool = True, share: bool = False):
    """Advance one iteration; returns ``(new_state, StepOutcome)``."""
    n = state.n_machines
    x = compute_heights(state.q)
    sel = select_machines(x, osc, rng=rng)
    rewards = np.asarray(env.draw_round(sel, rng, policy, t=state.t), dtype=float)
    w = state.current_omega()
    dq = deltas_from_outcome(sel, rewards, w, n, share=share)
    q = apply_coupling(state.q, dq) if coupling else state.q + dq
    onehot = (sel[:, None] == np.arange(n)).astype(np.int64)
    won = (rewards > 0)[:, None]
    new = replace(
        state,
        q=q,
        plays=state.plays + onehot,
        failures=state.failures + onehot * ~won,
        wins=state.wins + onehot * won,
        t=state.t + 1,
    )
    return new, StepOutcome(sel, rewards, onehot.sum(axis=0))


@dataclass
class EpisodeNoise:
    """All randomness one or more episodes consume, drawn up front."""

    osc: np.ndarray  # (..., T, M, N)
    reward_u: np.ndarray  # (..., T, W)
    tie_u: np.ndarray  # (..., T, M)


def draw_episode_noise(rng, env, dyn: Dynamics, fluct: FluctuationSpec) -> EpisodeNoise:
    """Draw one episode's randomness from ``rng``: fluctuations, then reward
    uniforms, then tie-break uniforms."""
    m, n, t = dyn.n_players, env.n_machines, dyn.plays
    osc = fluctuation_series(fluct, t, m, n, rng)
    reward_u = rng.random((t, env.noise_width(m, dyn.policy)))
    tie_u = rng.random((t, m))
    return EpisodeNoise(osc, reward_u, tie_u)


def stack_noise(items) -> EpisodeNoise:
    items = list(items)
    return EpisodeNoise(
        np.stack([e.osc for e in items]),
        np.stack([e.reward_u for e in items]),
        np.stack([e.tie_u for e in items]),
    )


@dataclass
class EpisodeBatch:
    scores: np.ndarray  # (S, M)
    histogram: np.ndarray  # (S, M, N)
    final_modal: np.ndarray  # (S, M)
    max_fluct: np.ndarray  # (S,)
    q: np.ndarray  # (S, M, N) final estimates
    selections: np.ndarray | None = field(default=None, repr=False)  # (S, T, M)
    rewards: np.ndarray | None = field(default=None, repr=False)  # (S, T, M)
    q_history: np.ndarray | None = field(default=None, repr=False)  # (S, T, M, N) after each step


def simulate(env, dyn: Dynamics, noise: EpisodeNoise, keep_history: bool = False) -> EpisodeBatch:
    """Run ``S`` independent episodes side by side from ``Q = 0``.

    ``noise`` arrays carry a leading sample axis ``S``.
    """
    m, n, steps = dyn.n_players, env.n_machines, dyn.plays
    if m < 2 and dyn.coupling:
        raise DomainError("coupling needs at least two players")
    s = noise.osc.shape[0]
    if noise.osc.shape[1:] != (steps, m, n):
        raise InputError(f"noise shaped {noise.osc.shape[1:]}, expected {(steps, m, n)}")
    q = np.zeros((s, m, n))
    plays = np.zeros((s, m, n), dtype=np.int64)
    wins = np.zeros((s, m, n), dtype=np.int64)
    scores = np.zeros((s, m))
    window = min(dyn.window, steps)
    recent = np.zeros((s, m, n), dtype=np.int64)
    machines = np.arange(n)
    adaptive = dyn.omega is None
    share = dyn.collision_delta == "share"
    sel_hist = np.empty((s, steps, m), dtype=np.int16) if keep_history else None
    rew_hist = np.empty((s, steps, m)) if keep_history else None
    q_hist = np.empty((s, steps, m, n)) if keep_history else None

    for t in range(steps):
        x = compute_heights(q)
        sel = select_machines(x, noise.osc[:, t], tie_u=noise.tie_u[:, t])
        rew = env.rewards_from_uniforms(sel, noise.reward_u[:, t], dyn.policy)
        w = adaptive_omega(wins, plays, m, dyn.prior) if adaptive else dyn.omega
        dq = deltas_from_outcome(sel, rew, w, n, share=share)
        q = apply_coupling(q, dq) if dyn.coupling else q + dq
        onehot = sel[..., None] == machines
        plays += onehot
        wins += onehot & (rew > 0)[..., None]
        scores += rew
        if t >= steps - window:
            recent += onehot
        if keep_history:
            sel_hist[:, t] = sel
            rew_hist[:, t] = rew
            q_hist[:, t] = q

    return EpisodeBatch(
        scores=scores,
        histogram=plays,
        final_modal=recent.argmax(axis=-1),
        max_fluct=np.abs(noise.osc).reshape(s, -1).max(axis=1),
        q=q,
        selections=sel_hist,
        rewards=rew_hist,
        q_history=q_hist,
    )


def records_from_batch(batch: EpisodeBatch, env, samples=None, seed: int = 0, fingerprint: str = "") -> list[RunRecord]:
    samples = range(len(batch.scores)) if samples is None else samples
    out = []
    for j, idx in enumerate(samples):
        rec = RunRecord(
            scores=batch.scores[j],
            histogram=batch.histogram[j],
            final_modal=batch.final_modal[j],
            max_fluct=float(batch.max_fluct[j]),
            sample=int(idx),
            seed=seed,
            fingerprint=fingerprint,
        )
        rec.outcome = classify_outcome(rec, env)
        out.append(rec)
    return out


def run_episode(dyn: Dynamics, env, fluct: FluctuationSpec, rng, sample: int = 0, seed: int = 0,
                fingerprint: str = "") -> RunRecord:
    """One classified episode driven by ``rng``.

    Equivalent to the corresponding sample of a batched run that used the
    same stream.
    """
    noise = stack_noise([draw_episode_noise(rng, env, dyn, fluct)])
    batch = simulate(env, dyn, noise)
    return records_from_batch(batch, env, [sample], seed, fingerprint)[0]
