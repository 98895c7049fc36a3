"""Single-player tug-of-war (TOW) dynamics and its analytical companions.

The player keeps, per machine, an estimate ``Q_k = N_k - (1 + omega) L_k``
(``N`` plays, ``L`` failures). For two machines the displacement
``X = Q_A - Q_B + delta`` picks A when positive and B when negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "OMEGA_MAX",
    "TowState",
    "GeneralTowState",
    "tow_update",
    "tow_select",
    "omega0",
    "gamma_prime",
    "adaptive_omega",
    "gamma_star",
    "general_tow_update",
    "solvability_check",
    "tow_principle_gap",
    "regret",
    "simulate_tow",
]

OMEGA_MAX = 10.0


def omega0(gamma):
    """Near-optimal weighting ``gamma / (2 - gamma)``; accepts arrays."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0) or np.any(g >= 2):
        raise DomainError(f"omega0 needs 0 <= gamma < 2, got {gamma}")
    out = g / (2.0 - g)
    return float(out) if out.ndim == 0 else out


def gamma_prime(probs, n_players: int):
    """Sum of the ``n_players``-th and next-largest probabilities (last axis)."""
    p = np.asarray(probs, dtype=float)
    if not 1 <= n_players < p.shape[-1]:
        raise InputError(f"need 1 <= M < N, got M={n_players}, N={p.shape[-1]}")
    s = -np.sort(-p, axis=-1)
    out = s[..., n_players - 1] + s[..., n_players]
    return float(out) if out.ndim == 0 else out


def adaptive_omega(rewards, plays, n_players: int = 1, prior: str = "laplace", omega_max: float = OMEGA_MAX):
    """Weighting parameter from the player's own counts.

    ``prior="laplace"`` (default) estimates each probability as
    ``(R + 1) / (N + 2)``, which is 0.5 for an unplayed machine and tends to
    ``R/N``. ``prior="midpoint"`` is plain direct substitution ``R/N`` with
    0.5 for unplayed machines; it can freeze a machine's estimate at 0 after
    one early failure and lock the player onto the worse machine. Works on
    the last axis of arbitrarily batched counts.
    """
    r = np.asarray(rewards, dtype=float)
    n = np.asarray(plays, dtype=float)
    if prior == "midpoint":
        with np.errstate(invalid="ignore", divide="ignore"):
            est = np.where(n > 0, r / np.where(n > 0, n, 1.0), 0.5)
    elif prior == "laplace":
        est = (r + 1.0) / (n + 2.0)
    else:
        raise InputError(f"unknown prior {prior!r}")
    g = np.asarray(gamma_prime(est, n_players))
    with np.errstate(divide="ignore"):
        w = np.where(g < 2.0, g / np.where(g < 2.0, 2.0 - g, 1.0), np.inf)
    w = np.clip(w, 0.0, omega_max)
    return float(w) if w.ndim == 0 else w


@dataclass(frozen=True)
class TowState:
    """Counts and estimates of one TOW player.

    ``omega=None`` selects the adaptive weighting, recomputed from the
    player's own counts before every update. With a fixed ``omega`` the
    estimates are recomputed from the counts, so the closed form holds
    exactly rather than up to accumulated rounding.
    """

    plays: np.ndarray
    failures: np.ndarray
    estimates: np.ndarray
    omega: float | None = None
    n_players: int = 1
    prior: str = "laplace"

    @classmethod
    def fresh(cls, n_machines: int = 2, omega: float | None = None, n_players: int = 1, prior: str = "laplace"):
        if omega is not None and omega < 0:
            raise InputError("omega must be non-negative")
        z = np.zeros(n_machines, dtype=np.int64)
        return cls(z, z.copy(), np.zeros(n_machines), omega, n_players, prior)

    @property
    def rewards(self) -> np.ndarray:
        return self.plays - self.failures

    @property
    def adaptive(self) -> bool:
        return self.omega is None

    def current_omega(self) -> float:
        if self.omega is not None:
            return self.omega
        return adaptive_omega(self.rewards, self.plays, self.n_players, self.prior)


def tow_update(state: TowState, played: int, rewarded: bool) -> TowState:
    """Record one play: ``+1`` on success, ``-omega`` on failure."""
    if not 0 <= played < len(state.plays):
        raise InputError(f"machine {played} out of range")
    w = state.current_omega()
    plays = state.plays.copy()
    failures = state.failures.copy()
    q = state.estimates.copy()
    plays[played] += 1
    if not rewarded:
        failures[played] += 1
    if state.adaptive:
        q[played] += 1.0 if rewarded else -w
    else:
        q[played] = plays[played] - (1.0 + w) * failures[played]
    return replace(state, plays=plays, failures=failures, estimates=q)


def tow_select(state: TowState, delta: float = 0.0, rng=None) -> int:
    """Two-machine decision: 0 (A) if ``Q_A - Q_B + delta > 0``, 1 (B) if < 0.

    An exact tie is broken by a fair coin from ``rng``.
    """
    if len(state.estimates) != 2:
        raise InputError("tow_select handles two machines")
    x = state.estimates[0] - state.estimates[1] + delta
    if x > 0:
        return 0
    if x < 0:
        return 1
    if rng is None:
        raise InputError("a tie needs a random generator to break it")
    return int(rng.random() >= 0.5)


def gamma_star(means) -> float:
    """Average of the two largest machine means."""
    m = np.sort(np.asarray(means, dtype=float))[::-1]
    return float((m[0] + m[1]) / 2.0)


@dataclass(frozen=True)
class GeneralTowState:
    """TOW for real rewards: ``Q_k = sum(r_k) - gamma_star * N_k``."""

    reward_sums: np.ndarray
    plays: np.ndarray
    gamma_star: float
    upper: float = 1.0

    @classmethod
    def fresh(cls, means, upper: float = 1.0):
        n = len(means)
        return cls(np.zeros(n), np.zeros(n, dtype=np.int64), gamma_star(means), upper)

    @property
    def estimates(self) -> np.ndarray:
        return self.reward_sums - self.gamma_star * self.plays


def general_tow_update(state: GeneralTowState, played: int, reward: float) -> GeneralTowState:
    if not 0.0 <= reward <= state.upper:
        raise InputError(f"reward {reward} outside [0, {state.upper}]")
    sums = state.reward_sums.copy()
    plays = state.plays.copy()
    sums[played] += reward
    plays[played] += 1
    return replace(state, reward_sums=sums, plays=plays)


def solvability_check(alpha: float, beta: float, p_a: float, p_b: float) -> bool:
    """Whether random walks with steps ``+alpha`` / ``-beta`` separate A from B."""
    if alpha <= 0 or beta <= 0:
        raise InputError("flight distances must be positive")
    threshold = beta / (alpha + beta)
    return bool(p_b < threshold < p_a)


def tow_principle_gap(n_a, n_b, l_a, l_b, gamma):
    """Return ``(Q_A - Q_B, Q''_A - Q''_B)``; the two agree for omega0.

    The first term is the TOW difference with ``omega = omega0(gamma)``. The
    second is built independently from the estimates a player would hold if
    it updated both machines at once, knowing ``P_A + P_B = gamma``, rescaled
    by ``1 / (2 - gamma)``.
    """
    n_a, n_b, l_a, l_b, gamma = (np.asarray(v, dtype=float) for v in (n_a, n_b, l_a, l_b, gamma))
    if np.any(l_a > n_a) or np.any(l_b > n_b):
        raise InputError("failures cannot exceed plays")
    if np.any(gamma <= 0) or np.any(gamma >= 2):
        raise DomainError("need 0 < gamma < 2")
    w = omega0(gamma)
    tow = (n_a - n_b) - (1.0 + w) * (l_a - l_b)
    q_a = n_a - l_a + (gamma - 1.0) * n_b + l_b
    q_b = n_b - l_b + (gamma - 1.0) * n_a + l_a
    simultaneous = (q_a - q_b) / (2.0 - gamma)
    if tow.ndim == 0:
        return float(tow), float(simultaneous)
    return tow, simultaneous


def regret(p_a: float, p_b: float, expected_n_b):
    """Accumulated loss ``(P_A - P_B) E(N_B)``."""
    if p_a < p_b:
        raise InputError("regret is defined with P_A >= P_B")
    out = (p_a - p_b) * np.asarray(expected_n_b, dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass
class TowRunResult:
    """Outcome of :func:`simulate_tow` over a batch of independent runs."""

    mean_plays_b: np.ndarray  # sample mean of N_B(t), t = 1..steps
    plays: np.ndarray  # (runs, 2) final play counts
    failures: np.ndarray
    final_choice: np.ndarray = field(repr=False)  # (runs,) machine played last


def simulate_tow(probs, steps: int, rngs, omega: float | None = None, delta_amplitude: float = 1.0,
                 prior: str = "laplace") -> TowRunResult:
    """Run independent two-machine TOW players side by side.

    Each entry of ``rngs`` drives one run and supplies, in order, that run's
    reward uniforms, fluctuations ``delta ~ U(-a, a)`` and tie-break
    uniforms for all ``steps``.
    """
    p = np.asarray(probs, dtype=float)
    if p.shape != (2,):
        raise InputError("simulate_tow handles two machines")
    runs = len(rngs)
    u = np.empty((runs, steps))
    delta = np.empty((runs, steps))
    tie = np.empty((runs, steps))
    for j, rng in enumerate(rngs):
        u[j] = rng.random(steps)
        delta[j] = rng.uniform(-delta_amplitude, delta_amplitude, steps) if delta_amplitude > 0 else 0.0
        tie[j] = rng.random(steps)

    plays = np.zeros((runs, 2), dtype=np.int64)
    failures = np.zeros((runs, 2), dtype=np.int64)
    q = np.zeros((runs, 2))
    rows = np.arange(runs)
    mean_b = np.empty(steps)
    nb_total = 0
    choice = np.zeros(runs, dtype=np.intp)
    for t in range(steps):
        x = q[:, 0] - q[:, 1] + delta[:, t]
        choice = np.where(x > 0, 0, np.where(x < 0, 1, (tie[:, t] >= 0.5).astype(np.intp)))
        ok = u[:, t] < p[choice]
        if omega is None:
            w = adaptive_omega(plays - failures, plays, 1, prior)
        else:
            w = omega
        plays[rows, choice] += 1
        failures[rows, choice] += ~ok
        if omega is None:
            q[rows, choice] += np.where(ok, 1.0, -w)
        else:
            q[rows, choice] = plays[rows, choice] - (1.0 + omega) * failures[rows, choice]
        nb_total += int(choice.sum())
        mean_b[t] = nb_total / runs
    return TowRunResult(mean_b, plays, failures, choice)
